import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasjoin.exactmath import factorize, is_probable_prime
from sasjoin.join import WeightPair
from sasjoin.search import (
    BUILTIN_SEEDS, SEED_DIM7, SEED_DIM9, FamilyPolynomial, SearchInputError, SeedStructure,
    brute_force_residues, candidate_pairs, congruence_certify, default_ledger_dir, grid_search,
    read_ledger, revalidate, roots_mod_p, se_extend, v_ratio, ypq_csc_search,
)

PRIMES = [p for p in range(2, 2000) if is_probable_prime(p)]


# roots mod p --------------------------------------------------------------------------------

@settings(max_examples=200)
@given(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=1, max_size=6), st.sampled_from(PRIMES))
def test_roots_mod_p_matches_brute_force(coeffs, p):
    want = [r for r in range(p) if sum(c * r ** i for i, c in enumerate(coeffs)) % p == 0]
    assert roots_mod_p(coeffs, p) == want


def test_roots_mod_p_split_products_of_linears():
    p = 1000003
    rng = random.Random(2)
    for _ in range(20):
        rs = sorted(set(rng.randrange(p) for _ in range(4)))
        poly = [1]
        for r in rs:
            poly = [(a - r * b) % p for a, b in zip([0] + poly, poly + [0])]
        assert roots_mod_p(poly, p) == rs


# family polynomials ------------------------------------------------------------------------------

def test_family_build_pulls_out_content():
    f = FamilyPolynomial.build(6, [(4, 2), (-3, 0, 6)])
    assert f.factors == ((2, 1), (-1, 0, 2))
    assert f.constant.value == 6 * 2 * 3
    assert f(5) == 6 * (4 + 2 * 5) * (-3 + 6 * 25)
    with pytest.raises(SearchInputError):
        FamilyPolynomial.build(6, [(3,)])


@given(st.integers(0, 10 ** 4))
def test_family_json_round_trip_and_evaluation(t):
    for seed in BUILTIN_SEEDS.values():
        f = seed.upsilon
        assert FamilyPolynomial.from_json(f.to_json()) == f
        want = f.constant.value
        for fac in f.factors:
            want *= sum(c * t ** i for i, c in enumerate(fac))
        assert f(t) == want


def test_seed_values():
    assert SEED_DIM7.upsilon(0) == 2 ** 2 * 3 ** 2 * 17 * 1387 * 43 * 11
    assert SEED_DIM7.dimension == 7 and SEED_DIM9.dimension == 9
    assert SeedStructure.from_json(SEED_DIM9.to_json()) == SEED_DIM9


# congruence certificates ------------------------------------------------------------------------------

def test_dim7_constants_coprime_to_91():
    assert math.gcd(1387 * 43 * 11, 7 * 13) == 1
    assert factorize(1387).as_dict() == {19: 1, 73: 1}
    cert = congruence_certify(SEED_DIM7.upsilon, 91)
    assert cert.constant_ok and cert.admits(0)
    assert 0 in cert.admissible()


def test_dim9_residue_zero_admissible():
    M = factorize(5 ** 2 * 29 * 37 * 28793 * 699761)
    assert M.as_dict() == {5: 2, 29: 1, 37: 1, 28793: 1, 699761: 1}
    cert = congruence_certify(SEED_DIM9.upsilon.scale(4454359), M)
    assert cert.admissible() is None  # radical far above the explicit-list limit
    assert cert.admits(0) and cert.nonempty


def test_unfactored_modulus_rejected():
    from sasjoin.exactmath import FactoredInteger
    with pytest.raises(SearchInputError):
        congruence_certify(SEED_DIM7.upsilon, FactoredInteger((), 221, 1))


family_st = st.builds(
    FamilyPolynomial.build,
    st.integers(1, 50),
    st.lists(st.lists(st.integers(-30, 30), min_size=2, max_size=4).filter(lambda c: c[-1] != 0),
             min_size=1, max_size=3),
)


@settings(max_examples=150)
@given(family_st, st.integers(1, 3000))
def test_congruence_matches_brute_force(fam, M):
    cert = congruence_certify(fam, M)
    assert cert.admissible() == brute_force_residues(fam, M)
    assert cert.count == len(brute_force_residues(fam, M))


def test_congruence_matches_brute_force_on_seeds():
    for M in [91, 7 * 13 * 62, 2 * 3 * 5 * 7 * 11 * 13, 49 * 26 * 13]:
        for seed in BUILTIN_SEEDS.values():
            cert = congruence_certify(seed.upsilon.scale(62), M)
            assert cert.admissible() == brute_force_residues(seed.upsilon.scale(62), M)


# se_extend -----------------------------------------------------------------------------------------------

def test_se_extend_dim9_example():
    c = se_extend(SEED_DIM7, (49, 13), (49, 26))
    assert c.l == WeightPair(13, 62)
    assert (c.stage.s, c.stage.m, c.stage.n) == (1, 62, 8281)
    assert c.certificate.modulus.value == 13 * 49 * 13
    assert c.certificate.radical == 91
    assert c.smooth and c.certificate.admits(0)
    for t in range(0, 500, 7):
        fam = 62 * SEED_DIM7.upsilon(t)
        assert c.certificate.admits(t) == (math.gcd(fam, 13 * 49 * 13) == 1)
        assert c.upsilon(t) == 62 * 49 * 26 * SEED_DIM7.upsilon(t)


def test_se_extend_reindexing_gives_the_dim9_seed():
    c = se_extend(SEED_DIM7, (49, 13), (49, 26))
    sub = c.upsilon.substitute(91)
    assert 780300 * 91 ** 2 == 6461664300
    for that in range(50):
        assert sub(that) == SEED_DIM9.upsilon(that) == c.upsilon(91 * that)


def test_se_extend_dim11_selection():
    c = se_extend(SEED_DIM9, (25891157, 834997), (3498805, 834997))
    assert c.l == WeightPair(25, 4454359)
    assert c.certificate.modulus.as_dict() == {5: 2, 29: 1, 37: 1, 28793: 1, 699761: 1}
    assert c.certificate.admits(0)


def test_se_extend_product_is_rejected():
    c = se_extend(SEED_DIM7, (49, 13), (49, 13))
    assert c.stage.product and not c.smooth


def test_non_primitive_seed_rejected():
    s = SeedStructure(3, 13, SEED_DIM7.upsilon, primitive=False)
    with pytest.raises(SearchInputError):
        se_extend(s, (49, 13), (49, 26))


# Y^{p,q} ---------------------------------------------------------------------------------------------------

def test_ypq_search_examples():
    sols = ypq_csc_search(50)
    assert (19, 5, 37) in sols
    assert 4 * 19 ** 2 - 3 * 5 ** 2 == 37 ** 2
    assert all(q != 1 for _, q, _ in sols)
    assert sols == ypq_csc_search(50)


def test_ypq_search_matches_double_loop():
    want = []
    for p in range(1, 201):
        for q in range(1, p):
            if math.gcd(p, q) == 1:
                for n in range(1, 2 * p + 1):
                    if 4 * p * p - 3 * q * q == n * n:
                        want.append((p, q, n))
    assert ypq_csc_search(200) == want


# grid search ---------------------------------------------------------------------------------------------

def test_candidate_generation():
    assert v_ratio(WeightPair(49, 13), 2) == WeightPair(49, 26)
    cands = candidate_pairs(5, v_max=2)
    assert cands == sorted(cands, key=lambda c: (c[0].pair, c[1].pair))
    assert len(cands) == len(set(cands))
    with pytest.raises(SearchInputError):
        candidate_pairs(5)
    with pytest.raises(SearchInputError):
        candidate_pairs(5, v_max=2, ratios=[2])


def test_grid_rediscovers_dim9_pair(tmp_path):
    ledger = tmp_path / "ledger.jsonl"
    res = grid_search(SEED_DIM7, candidate_pairs(64, ratios=[2]), str(ledger), workers=1)
    found = {(tuple(e["w"]), tuple(e["v"])) for e in read_ledger(str(ledger))}
    assert ((49, 13), (49, 26)) in found
    assert len(res.lines) == len(found)


def test_grid_empty_range(tmp_path):
    ledger = tmp_path / "empty.jsonl"
    res = grid_search(SEED_DIM7, [], str(ledger))
    assert res.evaluated == 0 and ledger.read_text() == ""


def test_grid_is_deterministic_across_workers(tmp_path):
    cands = candidate_pairs(12, v_max=4)
    outs = []
    for workers in (1, 3):
        path = tmp_path / f"l{workers}.jsonl"
        grid_search(SEED_DIM7, cands, str(path), workers=workers, chunk_size=16, include_rejected=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0].splitlines()) == len(cands)


def test_every_ledger_entry_revalidates(tmp_path):
    path = tmp_path / "l.jsonl"
    grid_search(SEED_DIM7, candidate_pairs(20, v_max=3), str(path), include_rejected=True)
    entries = read_ledger(str(path))
    assert entries and all(revalidate(e) for e in entries)
    tampered = json.loads(json.dumps(entries[0]))
    tampered["verdict"] = "smooth-family" if tampered["verdict"] == "rejected" else "rejected"
    assert not revalidate(tampered)


def test_ledger_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv("SASJOIN_LEDGER_DIR", str(tmp_path))
    assert default_ledger_dir() == str(tmp_path)
    monkeypatch.delenv("SASJOIN_LEDGER_DIR")
    assert default_ledger_dir()
