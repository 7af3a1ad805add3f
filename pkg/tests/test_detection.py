"""
Tests for trend projection and the online detectors
"""
import numpy as np
import pytest

from detection.detector import DetectorState, TopologyDetector, detect_step_noisy
from detection.models import DetectionEvent, DetectorConfig
from detection.stream import (
    events_frame,
    read_measurement_stream,
    run_stream,
    score_clusters,
    write_events,
    write_measurement_stream,
    write_trace,
)
from detection.trend import DimensionMismatchError, ZeroTrendError, project, trend_vector
from grid.matrices import approx_voltage
from grid.model import SwitchStatus
from grid.power_flow import injections
from signatures.library import Candidate, SignatureKey, SignatureLibrary
from signatures.placement import Placement

E1 = np.array([1.0, 0.0], dtype=complex)
E2 = np.array([0.0, 1.0], dtype=complex)


@pytest.fixture
def plane_library():
    """Two orthogonal breakers on a two-bus placement, both open"""
    return SignatureLibrary(
        entries={
            SignatureKey(breaker=1, context=(0,)): E1,
            SignatureKey(breaker=2, context=(0,)): E2,
        },
        placement=Placement(name="plane", buses=(1, 2)),
        fingerprint="plane",
        r=2,
    )


def _linear_samples(grid, cache, placement, before, after, switch_at, duration):
    """Noise-free linearized stream at nominal load with one breaker action"""
    p, q = grid.nominal_power()
    s = injections(p, q)
    index = placement.indices(grid)
    y_before = approx_voltage(cache.inverse(before), s, grid.base_voltage)[index]
    y_after = approx_voltage(cache.inverse(after), s, grid.base_voltage)[index]
    return np.array([y_before if t < switch_at else y_after for t in range(duration)])


def test_detector_config_defaults():
    assert DetectorConfig(mode="ideal").min_proj == 0.98
    assert DetectorConfig().min_proj == 0.94
    assert DetectorConfig(mode="noisy", min_proj=0.5).min_proj == 0.5
    assert DetectorConfig(mode="ideal").lag == 1
    assert DetectorConfig(tau=7).lag == 7
    with pytest.raises(ValueError):
        DetectorConfig(mode="noisy", tau=1)
    with pytest.raises(ValueError):
        DetectorConfig(min_proj=1.5)


def test_detection_event_requires_toggle():
    sigma = SwitchStatus.parse("1,0")
    with pytest.raises(ValueError):
        DetectionEvent(
            sample=3, cluster_start=3, breaker=1, sigma_before=sigma,
            sigma_after=sigma, score=0.99,
        )


def test_trend_vector():
    delta = trend_vector(E1 + E2, E2, t1=7, t2=2)
    np.testing.assert_array_equal(delta.delta, E1)
    assert delta.lag == 5
    assert delta.norm == 1.0
    with pytest.raises(DimensionMismatchError):
        trend_vector(E1, np.ones(3))
    with pytest.raises(ValueError):
        trend_vector(E1, E2, t1=2, t2=2)


def test_project_self_and_orthogonal():
    candidates = [
        Candidate(1, E1, SwitchStatus.parse("1,0")),
        Candidate(2, E2, SwitchStatus.parse("0,1")),
    ]
    scores = project(E1, candidates)
    assert scores.breaker == 1
    assert scores.value == pytest.approx(1.0)
    assert scores.scores[2] == 0.0
    assert scores.status_after == SwitchStatus.parse("1,0")


def test_project_phase_and_scale_invariance(libraries):
    """Test that complex scaling of the trend leaves every score unchanged"""
    rng = np.random.default_rng(7)
    candidates = libraries["P15"].particular(SwitchStatus.parse("1,1,1,0,1"))
    delta = rng.normal(size=15) + 1j * rng.normal(size=15)
    reference = project(delta, candidates)
    for _ in range(20):
        alpha = rng.uniform(0.01, 100.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        scaled = project(alpha * delta, candidates)
        assert scaled.breaker == reference.breaker
        for breaker, value in reference.scores.items():
            assert scaled.scores[breaker] == pytest.approx(value, abs=1e-12)


def test_project_ties_go_to_lowest_breaker():
    status = SwitchStatus.parse("1,1,1")
    candidates = [
        Candidate(3, E1, status.toggle(3)),
        Candidate(1, E1, status.toggle(1)),
        Candidate(2, E2, status.toggle(2)),
    ]
    assert project(E1, candidates).breaker == 1


def test_project_errors():
    candidates = [Candidate(1, E1, SwitchStatus.parse("1"))]
    with pytest.raises(ZeroTrendError):
        project(np.zeros(2), candidates)
    with pytest.raises(DimensionMismatchError):
        project(np.ones(3), candidates)
    with pytest.raises(ValueError):
        project(E1, [])


def test_ideal_detects_every_action_on_p7(grid, cache, libraries):
    """Test exactly one correct event at the switching sample for all 160 actions"""
    library = libraries["P7"]
    config = DetectorConfig(mode="ideal")
    for sigma in grid.admissible_statuses():
        for breaker in range(1, grid.r + 1):
            after = sigma.toggle(breaker)
            samples = _linear_samples(grid, cache, library.placement, sigma, after, 5, 10)
            result = run_stream(library, config, sigma, samples)

            assert len(result.events) == 1, f"{sigma} S{breaker}"
            event = result.events[0]
            assert event.sample == 5
            assert event.breaker == breaker
            assert event.sigma_after == after
            assert event.score >= 0.98


def test_ideal_constant_stream_is_silent(grid, cache, libraries):
    library = libraries["P33"]
    sigma = SwitchStatus.parse("1,1,1,0,1")
    samples = _linear_samples(grid, cache, library.placement, sigma, sigma, 0, 12)
    result = run_stream(library, DetectorConfig(mode="ideal"), sigma, samples)
    assert result.events == []
    assert np.all(result.norms == 0)


def test_noisy_commits_after_tau_samples(grid, cache, libraries):
    """Test cluster t*..t*+tau-1 and the commit at its last sample"""
    library = libraries["P15"]
    sigma = SwitchStatus.parse("1,1,1,0,1")
    config = DetectorConfig(mode="noisy", tau=5, min_norm=1e-6)
    samples = _linear_samples(grid, cache, library.placement, sigma, sigma.toggle(3), 20, 40)

    result = run_stream(library, config, sigma, samples)

    assert len(result.events) == 1
    event = result.events[0]
    assert event.breaker == 3
    assert event.cluster_start == 20
    assert event.sample == 24
    assert event.span == 5
    clusters = score_clusters(result.scores, config.min_proj)
    assert [(c.start, c.length) for c in clusters] == [(20, 5)]
    assert np.all(result.norms[25:] == 0)


def test_noisy_cluster_restarts_on_new_candidate(plane_library):
    config = DetectorConfig(mode="noisy", tau=2, min_norm=0.1)
    state = DetectorState(config=config, sigma=SwitchStatus.parse("0,0"))

    for y in (0 * E1, 0 * E1):
        _, event = detect_step_noisy(state, y, plane_library)
        assert event is None
    assert not state.warmed_up

    _, event = detect_step_noisy(state, E1, plane_library)
    assert event is None
    assert (state.candidate.breaker, state.cluster_length, state.cluster_start) == (1, 1, 2)

    _, event = detect_step_noisy(state, E2, plane_library)
    assert event is None
    assert (state.candidate.breaker, state.cluster_length, state.cluster_start) == (2, 1, 3)

    _, event = detect_step_noisy(state, E1 + E2, plane_library)
    assert event is not None
    assert (event.breaker, event.sample, event.cluster_start, event.span) == (2, 4, 3, 2)
    assert state.sigma == SwitchStatus.parse("0,1")
    assert state.candidate is None and state.cluster_length == 0


def test_noisy_norm_gate_resets_cluster(plane_library):
    config = DetectorConfig(mode="noisy", tau=2, min_norm=0.1)
    state = DetectorState(config=config, sigma=SwitchStatus.parse("0,0"))
    for y in (0 * E1, 0 * E1, E1):
        detect_step_noisy(state, y, plane_library)
    assert state.cluster_length == 1

    detect_step_noisy(state, 0.01 * E1, plane_library)
    assert state.cluster_length == 0
    assert state.last_norm == pytest.approx(0.01)
    assert state.last_score == 0.0
    assert state.events == []


def test_noisy_low_score_resets_cluster(plane_library):
    config = DetectorConfig(mode="noisy", tau=2, min_norm=0.1)
    state = DetectorState(config=config, sigma=SwitchStatus.parse("0,0"))
    for y in (0 * E1, 0 * E1, E1):
        detect_step_noisy(state, y, plane_library)

    detect_step_noisy(state, E1 + E2, plane_library)
    assert state.last_raw_score == pytest.approx(1 / np.sqrt(2))
    assert state.cluster_length == 0
    assert state.events == []


def test_ideal_below_threshold_keeps_estimate(plane_library):
    detector = TopologyDetector(plane_library, DetectorConfig(mode="ideal"), SwitchStatus.parse("0,0"))
    assert detector.step(0 * E1) is None
    assert detector.step(E1 + 0.5 * E2) is None
    assert detector.state.last_score == pytest.approx(1 / np.sqrt(1.25))
    assert detector.sigma == SwitchStatus.parse("0,0")

    event = detector.step(E1 + 0.5 * E2 + E2)
    assert event.breaker == 2
    assert detector.sigma == SwitchStatus.parse("0,1")


def test_detector_validates_inputs(plane_library, libraries):
    with pytest.raises(ValueError):
        TopologyDetector(plane_library, DetectorConfig(), SwitchStatus.parse("0,0,0"))
    with pytest.raises(ValueError):
        TopologyDetector(plane_library, DetectorConfig(), SwitchStatus.parse("1,1"))

    detector = TopologyDetector(plane_library, DetectorConfig(), SwitchStatus.parse("0,0"))
    with pytest.raises(DimensionMismatchError):
        detector.step(np.ones(3))


def test_snapshot_is_independent(plane_library):
    detector = TopologyDetector(plane_library, DetectorConfig(tau=2), SwitchStatus.parse("0,0"))
    detector.step(0 * E1)
    saved = detector.state.snapshot()
    detector.step(0 * E1)
    detector.step(E1)
    assert saved.sample == 0
    assert len(saved.buffer) == 1
    assert saved.candidate is None
    assert detector.state.sample == 2


def test_empty_stream(libraries):
    result = run_stream(libraries["P7"], DetectorConfig(), SwitchStatus.parse("1,1,1,0,1"), [])
    assert result.events == []
    assert result.scores.shape == (0,)
    assert result.norms.shape == (0,)


def test_score_clusters():
    trace = [0.95, 0.96, 0.5, 0.91, 0.2, 0.99]
    clusters = score_clusters(trace, 0.9)
    assert [(c.start, c.length) for c in clusters] == [(0, 2), (3, 1), (5, 1)]
    assert clusters[0].peak == 0.96
    assert score_clusters([0.9, 0.9], 0.9) == []


def test_measurement_stream_csv(tmp_path):
    placement = Placement(buses=(9, 12, 15))
    rng = np.random.default_rng(3)
    samples = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
    path = tmp_path / "stream.csv"

    write_measurement_stream(samples, placement, path)
    np.testing.assert_allclose(read_measurement_stream(path, placement), samples, rtol=1e-14)

    reordered = Placement(buses=(15, 9))
    np.testing.assert_allclose(read_measurement_stream(path, reordered), samples[:, [2, 0]], rtol=1e-14)

    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(DimensionMismatchError):
        read_measurement_stream(path, placement)


def test_events_and_trace_files(tmp_path, plane_library):
    config = DetectorConfig(mode="ideal")
    result = run_stream(plane_library, config, SwitchStatus.parse("0,0"), [0 * E1, E1, E1])
    assert len(result.events) == 1

    frame = events_frame(result.events)
    assert frame.loc[0, "sigma_after"] == "(1,0)"
    write_events(result.events, tmp_path / "events.csv")
    write_trace(result, tmp_path / "trace.csv")
    assert (tmp_path / "events.csv").read_text().startswith("sample,cluster_start,breaker")
    assert len((tmp_path / "trace.csv").read_text().splitlines()) == 4


@pytest.mark.parametrize("name", ["P33", "P15", "P7"])
def test_linear_trend_saturates_its_own_signature(grid, cache, libraries, name):
    """Test score >= 0.999 on the true breaker for every admissible action"""
    library = libraries[name]
    for sigma in grid.admissible_statuses():
        for breaker in range(1, grid.r + 1):
            before, after = _linear_samples(
                grid, cache, library.placement, sigma, sigma.toggle(breaker), 1, 2
            )
            scores = project(after - before, library.particular(sigma))
            assert scores.breaker == breaker, f"{sigma} S{breaker}"
            assert scores.scores[breaker] >= 0.999, f"{sigma} S{breaker}"


def test_opening_and_closing_score_alike(grid, cache, libraries):
    """Test that closing and reopening a breaker give the same score magnitude"""
    library = libraries["P15"]
    for key in library.keys():
        opened, closed = key.open_status(), key.closed_status()
        y_open, y_closed = _linear_samples(grid, cache, library.placement, opened, closed, 1, 2)
        closing = project(y_closed - y_open, library.particular(opened))
        opening = project(y_open - y_closed, library.particular(closed))
        assert closing.breaker == opening.breaker == key.breaker
        assert closing.value == pytest.approx(opening.value, abs=1e-12)
        g = library.vector(key)
        assert abs(np.vdot(g, y_closed - y_open)) == pytest.approx(abs(np.vdot(g, y_open - y_closed)))
