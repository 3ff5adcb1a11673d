import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftnkit import sim
from ftnkit.isi import ChannelTaps, subcarrier_gains
from ftnkit.pulses import PulseSpec
from ftnkit.sim import SimConfig


def _taps(tau):
    return SimConfig(tau=tau, N=64, snr_list_db=(0,)).channel()


@given(st.sampled_from([0.6, 0.8, 0.9, 1.0]), st.integers(0, 2**32 - 1))
def test_cyclic_prefix_diagonalises_channel(tau, seed):
    rng = np.random.default_rng(seed)
    taps = _taps(tau)
    s = rng.standard_normal((3, 64)) + 1j * rng.standard_normal((3, 64))
    y = sim.ofdm_channel(s, taps, len(taps) - 1)
    np.testing.assert_allclose(y, s * subcarrier_gains(taps, 64), atol=1e-10)


def test_ofdm_channel_matches_circular_convolution():
    rng = np.random.default_rng(3)
    taps = ChannelTaps(np.array([0.2, 1.0, 0.2]), 1)
    s = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    x = np.fft.ifft(s, norm="ortho")
    circ = sum(h * np.roll(x, k - 1) for k, h in enumerate(taps.taps))
    want = np.fft.fft(circ, norm="ortho")
    np.testing.assert_allclose(sim.ofdm_channel(s, taps, 2)[0], want, atol=1e-12)
    with pytest.raises(ValueError, match="prefix"):
        sim.ofdm_channel(s, taps, 1)


def test_noiseless_qpsk_carries_two_bits_per_carrier():
    cfg = SimConfig(snr_list_db=(60.0,), N=256, tau=1.0, trials=3, waterfilling=False,
                    loading=False, fixed_scheme="QPSK")
    row = sim.run_ofdm_ftn(cfg).rows[0]
    assert row.throughput_bps == pytest.approx(2 * 256 / cfg.frame_seconds)
    assert row.correct_bps == row.throughput_bps
    assert row.stderr == 0.0


def test_deterministic_and_thread_independent():
    cfg = SimConfig(snr_list_db=(5.0, 15.0, 25.0), N=128, trials=12)
    a = sim.run_ofdm_ftn(cfg)
    b = sim.run_ofdm_ftn(cfg, threads=3)
    assert a.rows == b.rows and a.config_hash == b.config_hash
    c = sim.run_ofdm_ftn(dataclasses.replace(cfg, seed=1))
    assert c.rows != a.rows and c.config_hash != a.config_hash


def test_awgn_statistics(rng):
    n = sim.awgn(200_000, 4.0, rng)
    assert np.var(n) == pytest.approx(0.25, rel=0.02)
    assert np.var(n.real) == pytest.approx(0.125, rel=0.02)
    assert abs(np.mean(n.real * n.imag)) < 3e-3
    assert abs(np.corrcoef(n.real[1:], n.real[:-1])[0, 1]) < 0.01
    with pytest.raises(ValueError):
        sim.awgn(4, 0.0, rng)


def test_equalizer():
    np.testing.assert_allclose(sim.one_tap_equalize([2.0, 6.0], [1.0, 3.0], [4.0, 1.0]),
                               [1.0, 2.0])
    with pytest.raises(ValueError):
        sim.one_tap_equalize([1.0], [0.0])
    with pytest.raises(ValueError):
        sim.one_tap_equalize([1.0], [1.0], [0.0])


def test_packet_goodput_counts_whole_packets():
    err = np.zeros((2, 10), dtype=np.int64)
    err[0, 3] = 1
    err[1, 9] = 1
    np.testing.assert_array_equal(sim._packet_goodput(err, 4), [6.0, 8.0])
    np.testing.assert_array_equal(sim._packet_goodput(np.zeros((2, 0)), 4), [0.0, 0.0])


def test_waterfilling_helps_fixed_dense_scheme():
    base = SimConfig(snr_list_db=(20.0,), tau=0.8, trials=40, loading=False,
                     fixed_scheme="64QAM")
    on = sim.run_ofdm_ftn(base).rows[0].throughput_bps
    off = sim.run_ofdm_ftn(dataclasses.replace(base, waterfilling=False)).rows[0].throughput_bps
    assert on > off


def test_loading_grows_with_snr():
    cfg = SimConfig(snr_list_db=(0.0, 10.0, 20.0, 30.0), N=256, trials=10)
    t = sim.run_ofdm_ftn(cfg).throughput
    assert np.all(np.diff(t) > 0)


def test_colored_noise_runs_and_differs():
    cfg = SimConfig(snr_list_db=(12.0,), N=128, trials=8, loading=False, fixed_scheme="16QAM")
    white = sim.run_ofdm_ftn(cfg).rows[0]
    col = sim.run_ofdm_ftn(dataclasses.replace(cfg, colored_noise=True)).rows[0]
    assert col != white and col.correct_bps > 0


def test_config_validation():
    with pytest.raises(ValueError, match="channel memory"):
        SimConfig(tau=0.8, cp_length=2)
    with pytest.raises(ValueError, match="fixed_scheme"):
        SimConfig(loading=False)
    with pytest.raises(ValueError):
        SimConfig(snr_list_db=())
    with pytest.raises(ValueError):
        SimConfig(trials=0)
    with pytest.raises(ValueError):
        SimConfig(N=100)


def test_config_labels_and_dict():
    cfg = SimConfig(waterfilling=False, loading=False, fixed_scheme="16qam")
    assert cfg.label() == "nowf+16QAM"
    d = cfg.to_dict()
    assert d["fixed_scheme"] == "16QAM" and d["thresholds"] is None
    assert d["cp_length"] == len(cfg.channel()) - 1
    assert SimConfig().label() == "wf+loading"
    assert SimConfig(tau=1.0, pulse=PulseSpec("rect")).cp == 0


def test_compare_matrix_and_envelope():
    cfg = SimConfig(snr_list_db=(10.0, 25.0), N=64, trials=4)
    out = sim.compare_matrix(cfg, schemes=["QPSK", "16QAM"])
    assert sorted(out) == sorted(["wf+loading", "wf+QPSK", "wf+16QAM",
                                  "nowf+loading", "nowf+QPSK", "nowf+16QAM"])
    env = sim.fixed_envelope([out["nowf+QPSK"], out["nowf+16QAM"]])
    np.testing.assert_array_equal(
        env, np.maximum(out["nowf+QPSK"].throughput, out["nowf+16QAM"].throughput))


def test_curve_csv(tmp_path):
    c = sim.run_ofdm_ftn(SimConfig(snr_list_db=(10.0,), N=64, trials=2))
    p = tmp_path / "x.csv"
    c.to_csv(p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    assert raw.split(b"\n")[0].decode() == ",".join(sim.ThroughputCurve.HEADER)
    assert c.at(10.0).trials == 2
    with pytest.raises(KeyError):
        c.at(11.0)
