import math

import numpy as np
import pytest

import newton_mcmc as nm


def test_domain_and_energy():
    model = nm.IsingModel(2, 2, 0.1, 0.2)
    assert model.domain.dim == 4
    assert model.domain.state_count() == 16
    # all-zero spins are all -1: 4 aligned edges, bias -0.8
    assert model.energy([0, 0, 0, 0]) == pytest.approx(4 * 0.1 - 4 * 0.2)
    with pytest.raises(ValueError):
        model.energy([0, 2, 0, 0])


def test_newton_proposal_rows():
    model = nm.IsingModel(2, 2, 0.1, 0.2)
    state = [0, 1, 0, 0]
    alpha = 0.5
    q = nm.newton_proposal(model, state, alpha)
    assert q.shape == (4, 2)
    np.testing.assert_allclose(q.sum(axis=1), 1.0, atol=1e-14)
    diffs = model.differences(state)
    for i in range(4):
        logit = 0.5 * diffs[i] - 1.0 / (2 * alpha)
        flip = 1.0 / (1.0 + math.exp(-logit))
        assert q[i, 1 - state[i]] == pytest.approx(flip, rel=1e-12)


def test_run_chain_matches_exact_mean():
    model = nm.IsingModel(2, 2, 0.1, 0.2)
    spec = nm.ProposalSpec(nm.ProposalFamily.newton, alpha=0.5, mh=True)
    out = nm.run_chain(model, spec, steps=50000, seed=3)
    assert out["samples"].shape == (50000, 4)
    assert set(np.unique(out["accepted"])) <= {False, True}
    truth = np.array(nm.exact_mean(model))
    assert nm.rmse(out["running_mean"], truth) < 0.03
    again = nm.run_chain(model, spec, steps=50000, seed=3)
    np.testing.assert_array_equal(out["samples"], again["samples"])


def test_una_accepts_everything():
    model = nm.TableModel.random(nm.Domain.binary(3), 5)
    spec = nm.ProposalSpec(nm.ProposalFamily.newton, alpha=1.0, mh=False)
    out = nm.run_chain(model, spec, steps=200, seed=1)
    assert out["accepted"].all()


def test_mana_kernel_is_reversible():
    model = nm.TableModel.random(nm.Domain.binary(3), 2)
    k = nm.mana_kernel(model, 0.7)
    pi = np.asarray(nm.target_distribution(model))
    np.testing.assert_allclose(k.sum(axis=1), 1.0, atol=1e-12)
    flow = pi[:, None] * k
    np.testing.assert_allclose(flow, flow.T, atol=1e-12)
    np.testing.assert_allclose(nm.stationary_distribution(k), pi, atol=1e-10)
    gap = nm.spectral_gap(k)
    assert 0.0 < gap <= 2.0


def test_theorem_reports():
    model = nm.IsingModel(2, 2, 0.1, 0.2)
    reports = nm.verify_theorem_one(model, [1.0, 0.1, 0.01])
    assert [r["holds"] for r in reports] == [True, True, True]
    l1 = [r["l1_distance"] for r in reports]
    assert l1[0] > l1[1] > l1[2]
    two = nm.verify_theorem_two(model, 0.5)
    assert two["holds"]
    assert 0.0 < two["c"] <= 1.0


def test_multilinear_extension_at_vertices():
    model = nm.FacilityLocationModel([[1.0, 0.0], [0.0, 2.0]], 0.5)
    for s in ([0, 0], [1, 0], [0, 1], [1, 1]):
        assert nm.multilinear_extension(model, [float(v) for v in s]) == pytest.approx(model.energy(s))
    mid = nm.multilinear_extension(model, [0.5, 0.5])
    assert mid == pytest.approx(0.25 * (0.0 + 0.5 + 1.5 + 2.0))


def test_majority_vote_and_ess():
    samples = np.array([[1, 0, 1], [1, 1, 0], [1, 0, 0]])
    assert nm.majority_vote(samples, 1) == [1, 0, 0]
    rng = np.random.default_rng(0)
    x = rng.normal(size=20000)
    assert abs(nm.effective_sample_size(x) - 20000) < 0.05 * 20000


def test_run_command(tmp_path):
    config = "\n".join([
        "[model]", "kind = ising", "height = 2", "width = 2",
        "[run]", "steps = 100", "seeds = 0",
        "[proposal.mana]", "family = newton", "alpha = 0.5", "mh = true",
    ])
    assert nm.run_command("sample", config, str(tmp_path / "out"))
    assert (tmp_path / "out" / "trace_seed0.csv").exists()
    with pytest.raises(nm.ConfigError):
        nm.run_command("sample", "[model]\nkind = nope\n", str(tmp_path / "bad"))
