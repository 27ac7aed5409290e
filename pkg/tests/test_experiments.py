import numpy as np
import pytest

from oracles import chsh_exact_expectations, repeated_gate_curve
from shiftcal.backend import SimulatorBackend
from shiftcal.errors import InvalidParameterError
from shiftcal.experiments import (
    CHSH_SETTINGS,
    ChshSpec,
    SweepSpec,
    analytic_sweep,
    build_chsh_circuit,
    build_sweep_circuit,
    derive_seed,
    expectation_from_vector,
    run_chsh,
    run_initial_state_study,
    run_job,
    run_meridian_scan,
    run_repeated_gate_study,
    run_sweep,
)
from shiftcal.fitting import fit_job, shift_fit
from shiftcal.gates import u3_matrix
from shiftcal.mitigation import MitigationPolicy
from shiftcal.noise import NoiseConfig, ReadoutCal


@pytest.fixture(scope="module")
def sim():
    return SimulatorBackend()


def test_theta_grid_contract():
    spec = SweepSpec(n_points=31)
    assert spec.thetas == [np.pi * i / 30 for i in range(31)]
    spec11 = SweepSpec(n_points=11)
    assert spec11.thetas == [np.pi * i / 10 for i in range(11)]


def test_spec_validation():
    with pytest.raises(InvalidParameterError):
        SweepSpec(n_points=3)
    with pytest.raises(InvalidParameterError):
        SweepSpec(repeat_M=11)
    with pytest.raises(InvalidParameterError):
        SweepSpec(initial_state_prep=0.3)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(7, 0) == derive_seed(7, 0)
    assert derive_seed(7, 0) != derive_seed(7, 1)
    assert derive_seed(7, 0, 1) != derive_seed(7, 1, 0)


def test_noiseless_sweep_tracks_cosine(sim):
    spec = SweepSpec(shots=8192)
    record = run_sweep(sim, spec, None, seed=3)
    for theta, p0 in zip(record.thetas, record.p0_estimates):
        expected = np.cos(theta / 2) ** 2
        sigma = np.sqrt(max(expected * (1 - expected), 1e-12) / spec.shots)
        assert abs(p0 - expected) <= 6 * sigma + 1e-9


def test_sweep_alpha_at_desk_scale(sim):
    record = run_sweep(sim, SweepSpec(), NoiseConfig(delta=(0.09,)), seed=11)
    assert abs(shift_fit(record).alpha - 0.18) <= 0.02


def test_split_rotation_is_exact_composition():
    # two ideal half-rotations equal one full rotation, analytically
    one = analytic_sweep(SweepSpec(repeat_M=1), None)
    two = analytic_sweep(SweepSpec(repeat_M=2), None)
    assert np.abs(np.array(one.p0_estimates) - np.array(two.p0_estimates)).max() < 1e-12


def test_run_job_single_sweep(sim):
    job = run_job(sim, SweepSpec(), 1, None, seed=1)
    assert job.n_sweeps == 1
    assert job.metadata["sweep_spec"]["n_points"] == 31


def test_run_job_stability_within_job(sim):
    noise = NoiseConfig(delta=(0.07,), readout=ReadoutCal(((0.93, 0.91),)))
    job = run_job(sim, SweepSpec(), 10, noise, seed=5)
    assert fit_job(job).summary["alpha_std"] <= 0.02


def test_run_job_deterministic(sim):
    noise = NoiseConfig(delta=(0.04,))
    a = run_job(sim, SweepSpec(), 3, noise, seed=8, timestamp="t")
    b = run_job(sim, SweepSpec(), 3, noise, seed=8, timestamp="t")
    assert a == b


def test_interjob_spread_exceeds_intrajob(sim):
    # per-job delta drawn from a distribution: the histogram across jobs is
    # wide compared to the spread inside any one job
    rng = np.random.default_rng(42)
    means, stds = [], []
    for j in range(15):
        delta = float(rng.normal(-0.07, 0.04))
        job = run_job(sim, SweepSpec(shots=2048), 4, NoiseConfig(delta=(delta,)),
                      seed=derive_seed(90, j))
        s = fit_job(job).summary
        means.append(s["alpha_mean"])
        stds.append(s["alpha_std"])
    assert np.std(means) > 3 * np.mean(stds)


def test_prep_gate_included_in_circuit():
    spec = SweepSpec(initial_state_prep=np.pi / 2, repeat_M=2)
    circuit = build_sweep_circuit(spec, 1.0)
    kinds = [op.kind for op in circuit.ops]
    assert kinds == ["u3", "u3", "u3", "measure"]
    assert circuit.ops[0].params == (np.pi / 2, -np.pi / 2, np.pi / 2)
    assert circuit.ops[1].params == (0.5, -np.pi / 2, np.pi / 2)


def test_repeated_gate_study_noiseless(sim):
    results = run_repeated_gate_study(sim, (1, 3), None, seed=2, n_sweeps=2,
                                      spec=SweepSpec(shots=4096))
    for _, alpha in results:
        assert abs(alpha) <= 0.01


def test_repeated_gate_study_matches_composition_oracle(sim):
    noise = NoiseConfig(delta=(0.05,))
    results = run_repeated_gate_study(sim, (1, 2, 4), noise, seed=13, n_sweeps=5)
    spec = SweepSpec()
    for m, alpha in results:
        from shiftcal.backend import SweepRecord

        curve = repeated_gate_curve(spec.thetas, m, 0.05)
        oracle = shift_fit(SweepRecord(thetas=spec.thetas,
                                       p0_estimates=[float(v) for v in curve], shots=0))
        assert abs(alpha - oracle.alpha) <= 0.01


def test_initial_state_study_prep_zero_equals_plain_job(sim):
    noise = NoiseConfig(delta=(0.05,))
    study = run_initial_state_study(sim, (0.0,), noise, seed=21, n_sweeps=2)
    job = run_job(sim, SweepSpec(initial_state_prep=0.0), 2, noise,
                  seed=derive_seed(21, 0))
    assert study[0][0] == 0.0
    assert study[0][1] == fit_job(job).summary["alpha_mean"]


def test_initial_state_study_noiseless_prep(sim):
    study = run_initial_state_study(sim, (np.pi / 2,), None, seed=23, n_sweeps=2,
                                    spec=SweepSpec(shots=8192))
    assert abs(study[0][1]) <= 0.01


def test_initial_state_study_spread(sim):
    noise = NoiseConfig(delta=(0.05,))
    study = run_initial_state_study(sim, (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4),
                                    noise, seed=5, n_sweeps=10)
    alphas = [a for _, a in study]
    assert max(alphas) - min(alphas) <= 0.03


def test_meridian_scan_null_result(sim):
    noise = NoiseConfig(delta=(0.05,))
    phis = [2 * np.pi * k / 10 for k in range(10)]
    scan = run_meridian_scan(sim, phis, noise, seed=6, n_sweeps=5)
    alphas = [a for _, a in scan]
    assert max(alphas) - min(alphas) <= 0.02
    # the analytic curve is exactly meridian independent
    for phi in (0.0, 1.0, 4.0):
        rec = analytic_sweep(SweepSpec(meridian=phi), noise)
        base = analytic_sweep(SweepSpec(), noise)
        assert np.abs(np.array(rec.p0_estimates) - np.array(base.p0_estimates)).max() < 1e-12


# --- CHSH ---------------------------------------------------------------------


def test_basis_changes_diagonalize_observables():
    # W O W† = Z for every measurement setting, to 1e-10
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    observables = {
        None: z,                                   # A = Z, no gate
        (np.pi / 2, 0.0, np.pi): x,                # A' = X via Hadamard
        (-np.pi / 4, 0.0, 0.0): (x + z) / np.sqrt(2),
        (np.pi / 4, 0.0, 0.0): (-x + z) / np.sqrt(2),
    }
    for params, obs in observables.items():
        w = np.eye(2, dtype=complex) if params is None else u3_matrix(*params)
        assert np.abs(w @ obs @ w.conj().T - z).max() < 1e-10


def test_chsh_noiseless_tsirelson(sim):
    spec = ChshSpec(shots_per_basis=100_000)
    policy = MitigationPolicy(alpha={0: 0.0, 1: 0.0})
    result = run_chsh(sim, spec, policy, None, seed=3)
    sigma_c = 2.0 / np.sqrt(spec.shots_per_basis)
    assert abs(result.c_raw - 2 * np.sqrt(2)) <= 6 * sigma_c
    for label in ("AB", "AB'", "A'B"):
        assert result.expectations_raw[label] == pytest.approx(1 / np.sqrt(2), abs=6 * sigma_c)
    assert result.expectations_raw["A'B'"] == pytest.approx(-1 / np.sqrt(2), abs=6 * sigma_c)


def test_chsh_bounded_under_diagonal_noise(sim):
    # readout-only noise never pushes |C| beyond the quantum bound + shot noise
    rng = np.random.default_rng(55)
    spec = ChshSpec(shots_per_basis=50_000)
    sigma_c = 2.0 / np.sqrt(spec.shots_per_basis)
    for s in range(4):
        fids = tuple((float(rng.uniform(0.5, 1.0)), float(rng.uniform(0.5, 1.0)))
                     for _ in range(2))
        noise = NoiseConfig(delta=(0.0, 0.0), readout=ReadoutCal(fids))
        result = run_chsh(sim, spec, MitigationPolicy(alpha={0: 0.0, 1: 0.0}),
                          noise, seed=derive_seed(550, s))
        assert abs(result.c_raw) <= 2 * np.sqrt(2) + 6 * sigma_c


def test_chsh_maximal_readout_noise_kills_correlations(sim):
    cal = ReadoutCal(((0.5, 0.5), (0.5, 0.5)))
    noise = NoiseConfig(delta=(0.0, 0.0), readout=cal)
    spec = ChshSpec(shots_per_basis=100_000)
    result = run_chsh(sim, spec, MitigationPolicy(alpha={0: 0.0, 1: 0.0}), noise, seed=1)
    assert abs(result.c_raw) <= 6 * (2.0 / np.sqrt(spec.shots_per_basis))


def test_chsh_counts_match_exact_expectations(sim):
    noise = NoiseConfig(delta=(0.026, -0.036),
                        readout=ReadoutCal(((0.97, 0.96), (0.96, 0.95))))
    spec = ChshSpec(shots_per_basis=200_000)
    result = run_chsh(sim, spec, MitigationPolicy(alpha={0: 0.0, 1: 0.0}), noise, seed=17)
    exact, signs = chsh_exact_expectations(0.026, -0.036, noise.readout)
    sigma = 1.0 / np.sqrt(spec.shots_per_basis)
    for (label, *_), e in zip(CHSH_SETTINGS, exact):
        assert abs(result.expectations_raw[label] - e) <= 6 * sigma
    assert abs(result.c_raw - float(signs @ exact)) <= 12 * sigma


def test_expectation_parity_signs():
    assert expectation_from_vector([10, 0, 0, 0]) == 1.0
    assert expectation_from_vector([0, 10, 0, 0]) == -1.0
    assert expectation_from_vector([0, 0, 10, 0]) == -1.0
    assert expectation_from_vector([0, 0, 0, 10]) == 1.0
    assert expectation_from_vector([5, 5, 5, 5]) == 0.0


def test_chsh_circuit_shape():
    circuit = build_chsh_circuit(ChshSpec(), None, (-np.pi / 4, 0.0, 0.0), 100)
    kinds = [op.kind for op in circuit.ops]
    assert kinds == ["u3", "cx", "u3", "measure"]
    assert circuit.ops[-2].qubits == (1,)
