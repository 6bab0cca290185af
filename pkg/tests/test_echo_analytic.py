import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magnon_echo.chain import ChainSpec
from magnon_echo.channels import (SIGMA_Y, QdpEvent, QdpSequence, bit_flip, coherent, custom,
                                  phase_flip, project_x, project_z)
from magnon_echo.echo_analytic import (coherent_asymptote, echo_coherent, echo_incoherent,
                                       echo_multi_exact_z, echo_multi_truncated, expect_sigma_x,
                                       expect_sigma_y, expect_sigma_z, string_amplitude_exact,
                                       string_amplitude_truncated)
from magnon_echo.exact_oracle import Scenario, oracle_echo
from magnon_echo.states import InitialState

INF = ChainSpec(None)
N10 = ChainSpec(10)
HALF = InitialState.from_beta2(0.5)
ENT = InitialState.entangled(2 ** -0.5, 2 ** -0.5, 5)
GATE = coherent((1 + 1j) / np.sqrt(3), 1 / np.sqrt(3))


def test_sigma_z_examples():
    assert expect_sigma_z(HALF, N10, 1, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert expect_sigma_z(HALF, N10, 5, 0.0) == pytest.approx(1.0)
    assert expect_sigma_z(ENT, N10, 5, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_sigma_x_examples():
    for m, t0 in [(1, 0.0), (3, 2.0), (7, 11.0)]:
        assert expect_sigma_x(ENT, N10, m, t0) == 0.0
    assert expect_sigma_x(HALF, N10, 1, 0.0) == pytest.approx(1.0)
    assert abs(expect_sigma_x(HALF, INF, 1, 50.0)) <= 0.15


def test_sigma_y_from_phase():
    st = InitialState(2 ** -0.5, 1j * 2 ** -0.5)
    assert expect_sigma_y(st, N10, 1, 0.0) == pytest.approx(1.0)
    assert expect_sigma_y(ENT, N10, 2, 1.0) == 0.0


@pytest.mark.parametrize("p", [0.0, 0.3, 0.5, 1.0])
def test_phase_flip_at_origin(p):
    assert echo_incoherent(HALF, N10, QdpEvent(1, 0.0, phase_flip(p))) == pytest.approx(p, abs=1e-15)


@pytest.mark.parametrize("p", [0.0, 0.25, 0.9])
def test_entangled_bit_flip_is_p(p):
    for m in (1, 4, 9):
        for t0 in (0.0, 1.3, 7.0):
            assert echo_incoherent(ENT, N10, QdpEvent(m, t0, bit_flip(p))) == pytest.approx(p, abs=1e-12)


def test_large_epoch_limits():
    t0 = 50.0
    assert echo_incoherent(ENT, INF, QdpEvent(1, t0, project_z())) >= 0.99
    assert echo_incoherent(HALF, INF, QdpEvent(1, t0, project_z())) >= 0.99
    assert abs(echo_incoherent(HALF, INF, QdpEvent(1, t0, project_x())) - 0.5) <= 0.02
    for p in (0.2, 0.7):
        assert echo_incoherent(HALF, INF, QdpEvent(1, t0, phase_flip(p))) >= p + (1 - p) * 0.98


@pytest.mark.parametrize("state", [HALF, ENT])
def test_degenerate_channels_are_exactly_one(state):
    for t0 in (0.0, 0.4, 3.0):
        for m in (1, 5):
            assert echo_incoherent(state, N10, QdpEvent(m, t0, phase_flip(1.0))) == 1.0
            assert echo_incoherent(state, N10, QdpEvent(m, t0, bit_flip(1.0))) == 1.0


@pytest.mark.parametrize("state", [HALF, ENT, InitialState(0.6, 0.8j)])
def test_projective_identity(state):
    for m in (1, 2, 6):
        for t0 in np.linspace(0, 4, 9):
            sz = expect_sigma_z(state, N10, m, t0)
            sx = expect_sigma_x(state, N10, m, t0)
            assert echo_incoherent(state, N10, QdpEvent(m, t0, project_z())) == pytest.approx((1 + sz ** 2) / 2, abs=1e-12)
            assert echo_incoherent(state, N10, QdpEvent(m, t0, project_x())) == pytest.approx((1 + sx ** 2) / 2, abs=1e-12)


def test_coherent_examples():
    ident = coherent(1, 0)
    for state in (HALF, ENT):
        assert echo_coherent(state, N10, 3, 1.7, ident) == pytest.approx(1.0)
    vacuum = InitialState(1.0, 0.0)
    assert echo_coherent(vacuum, N10, 2, 0.9, GATE) == pytest.approx(2 / 3)
    with pytest.raises(TypeError):
        echo_incoherent(HALF, N10, QdpEvent(1, 1.0, GATE))


def test_coherent_asymptote():
    assert coherent_asymptote(GATE, 0) == 1.0
    assert coherent_asymptote(coherent(1, 0), 5) == 1.0
    assert coherent_asymptote(GATE, 2) == pytest.approx(4 / 9)
    with pytest.raises(ValueError):
        coherent_asymptote(GATE, -1)


@pytest.mark.parametrize("state", [HALF, ENT])
def test_custom_sigma_y_channel_matches_oracle(state):
    # Kraus set {sqrt(q) 1, sqrt(1-q) sy}; needs <sy> which the closed form covers
    ch = custom([np.sqrt(0.4) * np.eye(2), np.sqrt(0.6) * SIGMA_Y])
    for m, t0 in [(1, 0.0), (2, 0.7), (5, 2.2)]:
        ana = echo_incoherent(state, N10, QdpEvent(m, t0, ch))
        ora = oracle_echo(Scenario(N10, state, [QdpEvent(m, t0, ch)]))
        assert ana == pytest.approx(ora, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(0, 2 * np.pi), st.integers(1, 10), st.floats(0, 20),
       st.sampled_from(["pf", "bf", "z", "x", "gate"]), st.floats(0, 1), st.booleans())
def test_echo_range(b2, phase, m, t0, kind, p, entangled):
    beta = np.sqrt(b2) * np.exp(1j * phase)
    state = InitialState(np.sqrt(1 - b2), beta, 5 if entangled else None)
    if kind == "gate":
        val = echo_coherent(state, N10, m, t0, coherent(np.sqrt(p) * np.exp(1j * phase), np.sqrt(1 - p)))
    else:
        ch = {"pf": phase_flip(p), "bf": bit_flip(p), "z": project_z(), "x": project_x()}[kind]
        val = echo_incoherent(state, N10, QdpEvent(m, t0, ch))
    assert -1e-10 <= val <= 1 + 1e-10


# -- multiple QDPs -------------------------------------------------------------

@pytest.mark.parametrize("state", [HALF, ENT])
def test_multi_first_event_matches_single(state):
    seq = QdpSequence(0.8, (3, 1, 7), project_z())
    ser = echo_multi_exact_z(state, N10, seq)
    single = echo_incoherent(state, N10, QdpEvent(3, 0.8, project_z()))
    assert ser.values[0] == pytest.approx(single, abs=1e-12)


def test_multi_identity_channel():
    ser = echo_multi_exact_z(HALF, N10, QdpSequence(0.4, (1, 2, 3, 4, 5), phase_flip(1.0)))
    assert np.allclose(ser.values, 1.0, atol=1e-12)


def test_multi_rejects_non_conserving():
    with pytest.raises(ValueError):
        echo_multi_exact_z(HALF, N10, QdpSequence(1.0, (1, 2), bit_flip(0.5)))
    with pytest.raises(ValueError):
        echo_multi_exact_z(HALF, N10, QdpSequence(1.0, (1, 2), GATE))
    with pytest.raises(ValueError):
        echo_multi_exact_z(HALF, INF, QdpSequence(1.0, (1, 2), project_z()))


@pytest.mark.parametrize("state", [HALF, ENT])
@pytest.mark.parametrize("ch", [project_z(), phase_flip(0.3)])
def test_multi_matches_oracle(state, ch):
    seq = QdpSequence(0.9, (2, 5, 2, 9), ch)
    ser = echo_multi_exact_z(state, N10, seq)
    events = seq.events()
    for n in range(1, 5):
        assert ser.values[n - 1] == pytest.approx(oracle_echo(Scenario(N10, state, events[:n])), abs=1e-10)


def test_larger_spacing_gives_larger_echo_on_average():
    rng = np.random.default_rng(7)
    big = ChainSpec(1000)
    means = []
    for spacing in (0.1, 5.0):
        vals = []
        for _ in range(40):
            sites = tuple(int(x) for x in rng.integers(1, 10, 10))
            vals.append(echo_multi_truncated(HALF, big, QdpSequence(spacing, sites, project_z()), order=2).values)
        means.append(np.mean(vals, axis=0))
    # at n=1 and t0=0.1 the magnon has not reached most sites yet
    assert np.all(means[1][1:] > means[0][1:])


def test_string_single_site_is_sigma_z():
    for chain in (N10, INF):
        for m, t0 in [(1, 0.5), (3, 2.0)]:
            for k in (2, 5):
                amp = string_amplitude_truncated(chain, HALF, [m], [t0], k)
                assert amp == pytest.approx(expect_sigma_z(HALF, chain, m, t0), abs=1e-12)


def test_string_tends_to_one():
    amp = string_amplitude_truncated(INF, HALF, [1, 2, 3], [400.0, 400.0, 400.0], 4)
    assert abs(amp - 1) <= 0.01


@pytest.mark.parametrize("state", [HALF, ENT])
def test_string_full_order_is_exact(state):
    for t0 in np.linspace(0, 5, 11):
        exact = string_amplitude_exact(N10, state, [1, 2, 3], [t0] * 4)
        trunc = string_amplitude_truncated(N10, state, [1, 2, 3], [t0] * 4, 4)
        assert abs(exact - trunc) <= 1e-10


def test_string_order_validation():
    with pytest.raises(ValueError):
        string_amplitude_truncated(N10, HALF, [1, 2], [1.0, 1.0], 1)
    with pytest.raises(ValueError):
        string_amplitude_truncated(N10, HALF, [1, 2], [1.0], 3)


@pytest.mark.parametrize("state", [HALF, ENT])
@pytest.mark.parametrize("ch", [project_z(), phase_flip(0.3)])
def test_truncated_full_order_matches_exact(state, ch):
    seq = QdpSequence(1.1, (1, 4, 4, 8), ch)
    exact = echo_multi_exact_z(state, N10, seq).values
    trunc = echo_multi_truncated(state, N10, seq, order=5).values
    assert np.max(np.abs(exact - trunc)) <= 1e-10


def test_truncated_single_event_reduces_to_phase_flip():
    for p in (0.2, 0.5):
        ser = echo_multi_truncated(HALF, INF, QdpSequence(1.5, (2,), phase_flip(p)), order=2)
        assert ser.values[0] == pytest.approx(echo_incoherent(HALF, INF, QdpEvent(2, 1.5, phase_flip(p))), abs=1e-12)


def test_truncation_gap_shrinks_with_spacing():
    def gap(t0):
        a2 = string_amplitude_truncated(INF, HALF, [1, 2, 3], [t0] * 3, 2)
        a4 = string_amplitude_truncated(INF, HALF, [1, 2, 3], [t0] * 3, 4)
        return abs(a2 - a4)
    early = np.mean([gap(t) for t in np.linspace(1, 2, 21)])
    late = np.mean([gap(t) for t in np.linspace(4, 5, 21)])
    assert late < early
