"""Similarity-transformation verdicts on ladder models.

The expected outcomes are pinned: sign flips away from the known coupling
are equivalent with a diagonal +-1 witness, magnitude perturbations are
inequivalent, and small cases are re-derived in exact rational arithmetic.
"""

from fractions import Fraction

import numpy as np
import pytest

from chainsense import realization, ssm, sta
from chainsense.accessible import SensorConfig
from chainsense.errors import BudgetExceeded, DimensionMismatch
from chainsense.prng import random_binding, rational_binding, spawn_rng


def ladder(n_chain):
    return ssm.build(SensorConfig(n_chain, 2, "ZaYb", "xa"))


def expected_diag_witness(model, flipped_params):
    """diag(1, 1, d3, ...) with each step multiplying in the next flip."""
    d = [1.0, 1.0]
    for pid in model.param_ids[1:]:
        eps = -1.0 if pid in flipped_params else 1.0
        d.append(d[-1] * eps)
    return np.diag(d)


def test_identity_binding_gives_identity_s():
    model = ladder(2)
    binding = {"ha": 1.0, "hb": 0.7, "h1": 1.3}
    inst = sta.solve_similarity(model, binding, binding)
    assert inst.verdict == "equivalent"
    assert inst.affine_dim == 0
    assert np.allclose(inst.s_matrix, np.eye(4), atol=1e-9)


@pytest.mark.parametrize("n_chain", [2, 4])
def test_even_sign_flips_equivalent_with_diag_witness(n_chain):
    model = ladder(n_chain)
    rng = spawn_rng(3, "flips", str(n_chain))
    binding = random_binding(model.param_ids, rng)
    for flip in [{"hb"}, {"h1"}, {"hb", "h1"}, set(model.param_ids) - {"ha"}]:
        flipped = sta.flip_binding(binding, flip)
        inst = sta.solve_similarity(model, binding, flipped)
        assert inst.verdict == "equivalent", flip
        assert inst.affine_dim == 0
        assert np.allclose(inst.s_matrix, expected_diag_witness(model, flip),
                           atol=1e-8)


def test_ha_flip_is_inequivalent():
    model = ladder(2)
    binding = {"ha": 1.0, "hb": 0.7, "h1": 1.3}
    inst = sta.solve_similarity(model, binding, sta.flip_binding(binding, {"ha"}))
    assert inst.verdict == "inequivalent"


def test_magnitude_perturbation_inequivalent():
    model = ladder(2)
    binding = {"ha": 1.0, "hb": 0.7, "h1": 1.3}
    bumped = dict(binding, h1=1.3 * 1.1)
    inst = sta.solve_similarity(model, binding, bumped)
    assert inst.verdict == "inequivalent"
    assert inst.residual >= sta.INEQUIV_RESIDUAL


def test_equivalent_witness_preserves_markov():
    model = ladder(4)
    rng = spawn_rng(5, "markov-inv")
    binding = random_binding(model.param_ids, rng)
    flipped = sta.flip_binding(binding, {"h2", "h3"})
    inst = sta.solve_similarity(model, binding, flipped)
    assert inst.verdict == "equivalent"
    count = 2 * model.dim
    mk_h = ssm.markov_parameters(model, binding, count)
    mk_hp = ssm.markov_parameters(model, flipped, count)
    scale = max(1.0, np.max(np.abs(mk_h)))
    assert np.max(np.abs(mk_h - mk_hp)) < 1e-8 * scale


def test_nonminimal_model_rejected():
    model = ladder(3)
    binding = {p: 1.0 for p in model.param_ids}
    with pytest.raises(DimensionMismatch):
        sta.solve_similarity(model, binding, binding)


def test_odd_n_after_reduction_equivalent_and_not():
    model = ladder(3)
    rng = spawn_rng(7, "odd")
    binding = rational_binding(model.param_ids, rng)
    a_h, b, c = sta._minimal_triple(model, binding)
    flipped = sta.flip_binding(binding, {"hb", "h2"})
    a_hp, _, _ = sta._minimal_triple(model, flipped)
    inst = sta.solve_similarity_raw(a_h, a_hp, b, c)
    assert inst.verdict == "equivalent"
    bumped = dict(binding)
    bumped["h1"] = binding["h1"] * Fraction(9, 8)
    a_hp, _, _ = sta._minimal_triple(model, bumped)
    inst = sta.solve_similarity_raw(a_h, a_hp, b, c)
    assert inst.verdict == "inequivalent"


def test_exact_rederivation_agrees_with_svd_route():
    model = ladder(2)
    rng = spawn_rng(11, "exact-agree")
    binding = rational_binding(model.param_ids, rng)
    a, b, c = ssm.evaluate_exact(model, binding)
    for flip in [set(), {"hb"}, {"h1"}, {"hb", "h1"}]:
        flipped = sta.flip_binding(binding, flip)
        a_p, _, _ = ssm.evaluate_exact(model, flipped)
        ex = sta.solve_similarity_exact(a, a_p, b, c)
        fl = sta.solve_similarity(model, binding, flipped)
        assert ex.verdict == fl.verdict == "equivalent"
        assert ex.affine_dim == fl.affine_dim == 0
    bumped = dict(binding)
    bumped["hb"] = binding["hb"] * 2
    a_p, _, _ = ssm.evaluate_exact(model, bumped)
    ex = sta.solve_similarity_exact(a, a_p, b, c)
    fl = sta.solve_similarity(model, binding, bumped)
    assert ex.verdict == fl.verdict == "inequivalent"


def test_sign_orbit_sizes_and_cap():
    assert len(sta.sign_orbit({"a": 1.0})) == 2
    orbit = sta.sign_orbit({"ha": 1.0, "hb": 0.5, "h1": 2.0})
    assert len(orbit) == 8
    assert {tuple(sorted(b.items())) for b in orbit} == {
        tuple(sorted({"ha": sa, "hb": sb * 0.5, "h1": sc * 2.0}.items()))
        for sa in (1.0, -1.0) for sb in (1, -1) for sc in (1, -1)
    }
    with pytest.raises(BudgetExceeded):
        sta.sign_orbit({f"p{i}": 1.0 for i in range(21)})


def test_orbit_members_share_even_markov_parameters():
    model = ladder(2)
    binding = {"ha": 0.9, "hb": 1.4, "h1": 0.6}
    base = ssm.markov_parameters(model, binding, 10)
    for member in sta.sign_orbit(binding):
        if member["ha"] != binding["ha"]:
            continue  # known coupling is not scanned
        mk = ssm.markov_parameters(model, member, 10)
        assert np.allclose(mk, base, atol=1e-12)


@pytest.mark.parametrize("n_chain", [2, 3])
def test_identifiability_scan_ladder(n_chain):
    config = SensorConfig(n_chain, 2, "ZaYb", "xa")
    report = sta.identifiability_scan(config, trials=2, seed=13, n_perturb=5)
    assert report.identifiable_in_magnitude is True
    for trial in report.trials:
        assert trial.sign_flips_equivalent == trial.sign_flips_checked
        assert trial.perturbations_inequivalent == trial.perturbations_checked


def test_identifiability_scan_orthogonal_and_cube():
    orth = sta.identifiability_scan(SensorConfig(2, 2, "YaYb", "xa"))
    assert orth.identifiable_in_magnitude is False
    assert "zero" in orth.reason
    cube = sta.identifiability_scan(SensorConfig(2, 2, "YaZb", "xb"))
    assert cube.identifiable_in_magnitude is None
    assert "symbolic" in cube.reason
