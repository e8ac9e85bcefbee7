"""Mutual information and ergodic capacity against independent oracles.

The log-det path is checked against a naive determinant-ratio evaluation
on small matrices, and circulant-channel capacity against the closed form
in terms of the channel's frequency-response values.
"""

import numpy as np
import pytest

from otfsim.capacity import (
    capacity_sweep,
    ergodic_capacity,
    full_k_matrix,
    mutual_information,
    otfs_block_mi,
    per_symbol_k_matrices,
)
from otfsim.channel import ChannelModel, synthesize, trial_rng
from otfsim.errors import ConfigError, StructureError
from otfsim.kronops import dft_matrix, kron
from otfsim.mimo import MimoConfig, mimo_block_channel
from otfsim.transceiver import OtfsFrameConfig, WindowSpec


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def naive_mi(k_matrix, noise_var):
    """Determinant-ratio evaluation, safe only at small sizes."""
    rows = k_matrix.shape[0]
    num = np.linalg.det(k_matrix @ k_matrix.conj().T + noise_var * np.eye(rows))
    den = np.linalg.det(noise_var * np.eye(rows))
    return float(np.log2(np.real(num / den)))


def frequency_response(gains, delays, m):
    """M-point frequency response of a static multipath channel."""
    response = np.zeros(m, dtype=complex)
    for g, d in zip(gains, delays):
        response += g * np.exp(-2j * np.pi * d * np.arange(m) / m)
    return response


def make_mimo_channels(model, mcfg, seed, trial=0):
    return [
        [synthesize(model, mcfg.frame, rng=trial_rng(seed, trial, r, t))
         for t in range(mcfg.num_tx)]
        for r in range(mcfg.num_rx)
    ]


class TestMutualInformation:
    def test_unitary_k_closed_form(self):
        # K K^H = I_4 at sigma2 = 1: one bit per dimension.
        k = dft_matrix(4).conj().T
        assert abs(mutual_information(k, 1.0) - 4.0) <= 1e-12

    def test_zero_k(self):
        assert mutual_information(np.zeros((3, 3)), 0.7) == 0.0

    @pytest.mark.parametrize("trial", range(10))
    def test_matches_naive_determinant_ratio(self, trial):
        rng = np.random.default_rng(1000 + trial)
        k = rand_complex(rng, 4, 4)
        got = mutual_information(k, 0.5)
        assert abs(got - naive_mi(k, 0.5)) <= 1e-9

    def test_rectangular_k(self):
        rng = np.random.default_rng(2)
        k = rand_complex(rng, 4, 6)
        assert abs(mutual_information(k, 0.3) - naive_mi(k, 0.3)) <= 1e-9

    def test_rejects_bad_inputs(self):
        with pytest.raises(ConfigError):
            mutual_information(np.eye(2), 0.0)
        with pytest.raises(ValueError):
            mutual_information(np.array([[np.inf, 0], [0, 1]]), 1.0)

    def test_result_non_negative(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            k = 1e-3 * rand_complex(rng, 3, 3)
            assert mutual_information(k, 10.0) >= 0.0


class TestBlockMi:
    def test_identity_channel_unitary_k(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=0)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        channels = [[synthesize(ChannelModel.identity(), frame)]]
        result = otfs_block_mi(channels, WindowSpec.rectangular(), 1.0, mcfg)
        assert abs(result.total_bits - frame.grid_size) <= 1e-10
        for bits in result.per_symbol_bits:
            assert abs(bits - frame.num_subcarriers) <= 1e-10

    def test_same_channel_every_symbol_gives_equal_terms(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=1)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        model = ChannelModel.static_multipath([1.0, 0.4], [0, 1])
        channels = [[synthesize(model, frame)]]
        result = otfs_block_mi(channels, WindowSpec.rectangular(), 0.5, mcfg)
        assert abs(result.per_symbol_bits[0] - result.per_symbol_bits[1]) <= 1e-10
        assert abs(result.total_bits - 2 * result.per_symbol_bits[0]) <= 1e-8

    @pytest.mark.parametrize("trial", range(10))
    def test_total_matches_naive_full_k_evaluation(self, trial):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=2)
        mcfg = MimoConfig(frame=frame, num_tx=2, num_rx=2)
        model = ChannelModel.doppler_paths(num_taps=3, num_paths=2, max_doppler=0.05)
        channels = make_mimo_channels(model, mcfg, 1100 + trial)
        result = otfs_block_mi(channels, WindowSpec.rectangular(), 0.8, mcfg)
        blocks = mimo_block_channel(channels, mcfg)
        k_full = full_k_matrix(blocks, WindowSpec.rectangular(), mcfg)
        assert abs(result.total_bits - naive_mi(k_full, 0.8)) <= 1e-8

    def test_full_k_matches_dense_kronecker_composition(self):
        frame = OtfsFrameConfig(num_subcarriers=2, num_symbols=2, cp_len=1)
        mcfg = MimoConfig(frame=frame, num_tx=2, num_rx=2)
        model = ChannelModel.doppler_paths(num_taps=2, num_paths=1, max_doppler=0.1)
        channels = make_mimo_channels(model, mcfg, 7)
        blocks = mimo_block_channel(channels, mcfg)
        rng = np.random.default_rng(8)
        window = WindowSpec.general(rand_complex(rng, 4))
        k_full = full_k_matrix(blocks, window, mcfg)
        # Dense oracle assembled from np.kron pieces only.
        big = np.zeros((8, 8), dtype=complex)
        for n, blk in enumerate(blocks):
            big[n * 4:(n + 1) * 4, n * 4:(n + 1) * 4] = blk
        per_symbol = window.diagonal(frame).reshape(2, 2)
        stacked_diag = np.concatenate([np.tile(per_symbol[n], 2) for n in range(2)])
        dense = (big
                 @ kron(np.eye(4), dft_matrix(2).conj().T)
                 @ np.diag(stacked_diag)
                 @ kron(kron(dft_matrix(2).conj().T, np.eye(2)), dft_matrix(2)))
        assert np.max(np.abs(k_full - dense)) <= 1e-12

    def test_kkh_off_diagonal_vanishes(self):
        frame = OtfsFrameConfig(num_subcarriers=8, num_symbols=4, cp_len=3)
        mcfg = MimoConfig(frame=frame, num_tx=2, num_rx=2)
        model = ChannelModel.doppler_paths(num_taps=4, num_paths=3, max_doppler=0.1)
        channels = make_mimo_channels(model, mcfg, 9)
        blocks = mimo_block_channel(channels, mcfg)
        rng = np.random.default_rng(10)
        window = WindowSpec.general(rand_complex(rng, 32))
        k_full = full_k_matrix(blocks, window, mcfg)
        gram = k_full @ k_full.conj().T
        rows = 8 * 2
        for i in range(4):
            for j in range(4):
                if i != j:
                    assert np.max(np.abs(gram[i * rows:(i + 1) * rows,
                                              j * rows:(j + 1) * rows])) <= 1e-12

    def test_short_cp_raises(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=1)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        model = ChannelModel.static_multipath([1.0, 0.3, 0.2], [0, 1, 2])
        channels = [[synthesize(model, frame, enforce_cp=False)]]
        with pytest.raises(StructureError):
            otfs_block_mi(channels, WindowSpec.rectangular(), 1.0, mcfg)

    def test_unit_modulus_window_leaves_mi_unchanged(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=2)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        model = ChannelModel.doppler_paths(num_taps=3, num_paths=2, max_doppler=0.05)
        channels = make_mimo_channels(model, mcfg, 11)
        rng = np.random.default_rng(12)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, frame.grid_size))
        base = otfs_block_mi(channels, WindowSpec.rectangular(), 0.5, mcfg)
        rotated = otfs_block_mi(channels, WindowSpec.general(phases), 0.5, mcfg)
        assert abs(base.total_bits - rotated.total_bits) <= 1e-10


class TestErgodicCapacity:
    def test_identity_channel_exact_closed_form(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=0)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        res = ergodic_capacity(ChannelModel.identity(), WindowSpec.rectangular(),
                               1.0, mcfg, trials=1, seed=0)
        assert abs(res.capacity_otfs - 1.0) <= 1e-12
        assert abs(res.capacity_ofdm - 1.0) <= 1e-12

    def test_vanishing_snr(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=2)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        model = ChannelModel.doppler_paths(num_taps=3, num_paths=2, max_doppler=0.05)
        res = ergodic_capacity(model, WindowSpec.rectangular(), 1e6, mcfg,
                               trials=4, seed=1)
        assert res.capacity_otfs < 1e-4

    def test_static_two_tap_matches_frequency_response_oracle(self):
        gains = np.array([1.0, 0.5]) / np.sqrt(1.25)
        delays = [0, 1]
        frame = OtfsFrameConfig(num_subcarriers=8, num_symbols=3, cp_len=2)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        model = ChannelModel.static_multipath(gains, delays)
        res = ergodic_capacity(model, WindowSpec.rectangular(), 0.1, mcfg,
                               trials=2, seed=0)
        lam = frequency_response(gains, delays, 8)
        expected = np.sum(np.log2(1.0 + np.abs(lam) ** 2 / 0.1)) / frame.symbol_len
        assert abs(res.capacity_otfs - expected) <= 1e-9
        assert abs(res.capacity_ofdm - expected) <= 1e-9

    def test_routes_identical_per_trial(self):
        frame = OtfsFrameConfig(num_subcarriers=8, num_symbols=4, cp_len=3)
        mcfg = MimoConfig(frame=frame, num_tx=2, num_rx=2)
        model = ChannelModel.doppler_paths(num_taps=4, num_paths=3, max_doppler=0.05)
        res = ergodic_capacity(model, WindowSpec.rectangular(), 0.5, mcfg,
                               trials=16, seed=3)
        otfs_rates = res.per_trial_otfs_bits / frame.frame_len
        ofdm_rates = res.per_trial_ofdm_bits / frame.frame_len
        assert np.max(np.abs(otfs_rates - ofdm_rates)) <= 1e-8

    def test_thread_count_does_not_change_results(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=2)
        mcfg = MimoConfig(frame=frame, num_tx=2, num_rx=2)
        model = ChannelModel.doppler_paths(num_taps=3, num_paths=2, max_doppler=0.05)
        serial = ergodic_capacity(model, WindowSpec.rectangular(), 0.5, mcfg,
                                  trials=8, seed=4, threads=1)
        parallel = ergodic_capacity(model, WindowSpec.rectangular(), 0.5, mcfg,
                                    trials=8, seed=4, threads=4)
        assert np.array_equal(serial.per_trial_otfs_bits, parallel.per_trial_otfs_bits)
        assert serial.capacity_otfs == parallel.capacity_otfs

    def test_trials_validated(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=0)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        with pytest.raises(ConfigError):
            ergodic_capacity(ChannelModel.identity(), WindowSpec.rectangular(),
                             1.0, mcfg, trials=0)


class TestCapacitySweep:
    def test_single_point_equals_ergodic_capacity(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=2)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        model = ChannelModel.doppler_paths(num_taps=3, num_paths=2, max_doppler=0.05)
        sweep = capacity_sweep([0.5], model, WindowSpec.rectangular(), mcfg,
                               trials=5, seed=5)
        single = ergodic_capacity(model, WindowSpec.rectangular(), 0.5, mcfg,
                                  trials=5, seed=5)
        assert sweep[0].capacity_otfs == single.capacity_otfs

    def test_monotone_under_common_randomness(self):
        frame = OtfsFrameConfig(num_subcarriers=8, num_symbols=2, cp_len=2)
        mcfg = MimoConfig(frame=frame, num_tx=2, num_rx=2)
        model = ChannelModel.doppler_paths(num_taps=3, num_paths=2, max_doppler=0.05)
        sweep = capacity_sweep([0.1, 1.0], model, WindowSpec.rectangular(), mcfg,
                               trials=6, seed=6)
        assert sweep[0].capacity_otfs >= sweep[1].capacity_otfs

    def test_identity_channel_matches_closed_form_at_every_point(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=1)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        sigmas = [0.1, 0.5, 1.0, 2.0, 10.0]
        sweep = capacity_sweep(sigmas, ChannelModel.identity(),
                               WindowSpec.rectangular(), mcfg, trials=1, seed=0)
        for sigma2, res in zip(sigmas, sweep):
            expected = 4 * np.log2(1.0 + 1.0 / sigma2) / frame.symbol_len
            assert abs(res.capacity_otfs - expected) <= 1e-9

    def test_empty_grid_rejected(self):
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=0)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        with pytest.raises(ConfigError):
            capacity_sweep([], ChannelModel.identity(), WindowSpec.rectangular(),
                           mcfg, trials=1)


class TestReceiveWindowIrrelevance:
    def test_k_definition_contains_only_transmit_window(self):
        # MI is measured at the received samples, before receive windowing,
        # so K (and hence MI) involves the transmit window only.
        frame = OtfsFrameConfig(num_subcarriers=4, num_symbols=2, cp_len=2)
        mcfg = MimoConfig(frame=frame, num_tx=1, num_rx=1)
        model = ChannelModel.doppler_paths(num_taps=3, num_paths=2, max_doppler=0.05)
        channels = make_mimo_channels(model, mcfg, 13)
        blocks = mimo_block_channel(channels, mcfg)
        rng = np.random.default_rng(14)
        tx = WindowSpec.general(rand_complex(rng, 8))
        k_list = per_symbol_k_matrices(blocks, tx, mcfg)
        # Rebuild each K_n by hand: block @ F_M^H scaled by the tx diagonal.
        per_symbol = tx.diagonal(frame).reshape(2, 4)
        for n, k_n in enumerate(k_list):
            expected = blocks[n] @ dft_matrix(4).conj().T @ np.diag(per_symbol[n])
            assert np.max(np.abs(k_n - expected)) <= 1e-12
