import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from glbackward.errors import RejectionError
from glbackward.noise import (
    COEFFICIENT,
    MAX_REJECTIONS,
    CoefficientPath,
    GridObservations,
    NoiseSpec,
    brownian_paths,
    sample_diffusion_path,
    sample_final_observations,
    sample_source_observations,
    stream,
)
from glbackward.spectral import design_grid

REPS = 10_000
NODES = np.linspace(0.0, 1.0, 33)


# --- final data --------------------------------------------------------------


def test_final_zero_levels_is_exact():
    H = np.linspace(-1, 1, 7)
    out = sample_final_observations(H, NoiseSpec(v_max=1.0, lambda_levels=0.0))
    assert np.array_equal(out, H)


def test_final_mean_clt():
    spec = NoiseSpec(v_max=1.0)
    draws = np.array([sample_final_observations(np.zeros(3), spec, r) for r in range(REPS)])
    assert np.all(np.abs(draws.mean(axis=0)) <= 4 / np.sqrt(REPS))


def test_final_independent_across_points():
    spec = NoiseSpec(v_max=1.0)
    draws = np.array([sample_final_observations(np.zeros(4), spec, r) for r in range(REPS)])
    corr = np.corrcoef(draws.T)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.all(np.abs(off) <= 5 / np.sqrt(REPS))


def test_final_deterministic():
    spec = NoiseSpec(v_max=0.3, seed=11)
    a = sample_final_observations(np.ones(16), spec, 2)
    b = sample_final_observations(np.ones(16), spec, 2)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_final_observations(np.ones(16), spec, 3))


def test_final_per_point_levels():
    levels = np.array([0.0, 0.5, 0.0])
    out = sample_final_observations(np.zeros(3), NoiseSpec(v_max=1.0, lambda_levels=levels), 0)
    assert out[0] == 0.0 and out[2] == 0.0 and out[1] != 0.0


@pytest.mark.parametrize("kw", [{"v_max": -1}, {"vartheta": 2.0}, {"eps": -0.1}, {"lambda_levels": 1.5}])
def test_noise_spec_invariants(kw):
    with pytest.raises(ValueError):
        NoiseSpec(**kw)


# --- source paths ------------------------------------------------------------


def test_source_zero_vartheta_is_exact():
    G = np.arange(12.0).reshape(3, 4)
    out = sample_source_observations(G, NoiseSpec(vartheta=0.0), np.linspace(0, 1, 4))
    assert np.array_equal(out, G)


def test_source_starts_at_zero():
    out = sample_source_observations(np.zeros((50, NODES.size)), NoiseSpec(vartheta=1.0), NODES, 4)
    assert np.all(out[:, 0] == 0.0)


def test_brownian_variance_at_T():
    psi = brownian_paths(stream(0, 1, 0), NODES, REPS)
    assert abs(psi[:, -1].var() - 1.0) <= 0.1
    # and at an interior node
    assert abs(psi[:, 16].var() - 0.5) <= 0.05


def test_source_paths_variance_over_replicates():
    spec = NoiseSpec(vartheta=1.0)
    finals = np.concatenate(
        [sample_source_observations(np.zeros((100, NODES.size)), spec, NODES, r)[:, -1] for r in range(100)]
    )
    assert abs(finals.var() - 1.0) <= 0.1


@pytest.mark.parametrize("nodes", [[0.0, 0.5, 0.4], [0.1, 0.2], [0.0, 0.0, 1.0]])
def test_source_rejects_bad_nodes(nodes):
    with pytest.raises(ValueError):
        sample_source_observations(np.zeros((2, len(nodes))), NoiseSpec(vartheta=1.0), nodes)


# --- diffusion coefficient ---------------------------------------------------


def test_diffusion_eps_zero_is_truth():
    truth = CoefficientPath.constant(1.0, NODES)
    out = sample_diffusion_path(truth, 0.0, NoiseSpec(), 0.5, 2.0)
    assert np.array_equal(out.values, truth.values) and out.rejections == 0


def test_diffusion_acceptance_rate():
    truth = CoefficientPath.constant(1.0, np.linspace(0, 1, 257))
    spec = NoiseSpec()
    first_try = sum(sample_diffusion_path(truth, 1e-3, spec, 0.5, 2.0, r).rejections == 0 for r in range(1000))
    assert first_try >= 990


def test_diffusion_variance_of_xi():
    truth = CoefficientPath.constant(1.0, NODES)
    eps = 1e-3
    finals = np.array([sample_diffusion_path(truth, eps, NoiseSpec(), 0.5, 2.0, r).values[-1] for r in range(REPS)])
    xi = (finals - 1.0) / eps
    assert abs(xi.var() - 1.0) <= 0.1


def test_diffusion_deterministic():
    truth = CoefficientPath.constant(1.0, NODES)
    a = sample_diffusion_path(truth, 0.05, NoiseSpec(seed=3), 0.5, 2.0, 7)
    b = sample_diffusion_path(truth, 0.05, NoiseSpec(seed=3), 0.5, 2.0, 7)
    assert a.values.tobytes() == b.values.tobytes()


@given(st.integers(0, 10_000), st.floats(0.01, 0.6))
def test_accepted_path_satisfies_band(replicate, eps):
    truth = CoefficientPath.constant(1.0, NODES)
    try:
        out = sample_diffusion_path(truth, eps, NoiseSpec(), 0.5, 2.0, replicate)
    except RejectionError:
        return
    assert out.within(0.5, 2.0)


def test_diffusion_reports_rejections():
    # narrow band: many draws get rejected, and the count is recorded
    truth = CoefficientPath.constant(1.0, NODES)
    counts = [sample_diffusion_path(truth, 0.3, NoiseSpec(), 0.5, 1.3, r).rejections for r in range(50)]
    assert max(counts) > 0


def test_diffusion_gives_up():
    truth = CoefficientPath.constant(1.0, NODES)
    with pytest.raises(RejectionError, match="too large"):
        sample_diffusion_path(truth, 50.0, NoiseSpec(), 0.99, 1.01)
    assert MAX_REJECTIONS == 1000


def test_diffusion_truth_outside_band():
    with pytest.raises(ValueError):
        sample_diffusion_path(CoefficientPath.constant(3.0, NODES), 0.1, NoiseSpec(), 0.5, 2.0)


def test_streams_are_split_by_purpose_and_replicate():
    a = stream(0, COEFFICIENT, 0).standard_normal(4)
    assert not np.array_equal(a, stream(0, COEFFICIENT, 1).standard_normal(4))
    assert not np.array_equal(a, stream(0, 0, 0).standard_normal(4))
    # adding replicates never changes earlier ones: each is keyed on its own
    assert np.array_equal(a, stream(0, COEFFICIENT, 0).standard_normal(4))


# --- coefficient path --------------------------------------------------------


def test_path_integral_exact_for_linear():
    path = CoefficientPath(np.array([0.0, 1.0, 2.0]), np.array([1.0, 3.0, 3.0]))
    assert path.integral(0.0, 2.0) == pytest.approx(2.0 + 3.0)
    assert path.integral(0.5, 1.5) == pytest.approx(1.25 + 1.5)
    assert path.integral(1.5, 0.5) == pytest.approx(-2.75)


def test_path_rejects_unsorted_nodes():
    with pytest.raises(ValueError):
        CoefficientPath(np.array([0.0, 0.5, 0.2]), np.ones(3))


def test_observations_shape_checks():
    g = design_grid(4)
    with pytest.raises(ValueError):
        GridObservations(g, np.zeros(3), np.zeros(1), np.zeros((4, 1)))
    with pytest.raises(ValueError):
        GridObservations(g, np.zeros(4), np.zeros(2), np.zeros((4, 1)))
