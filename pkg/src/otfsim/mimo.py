"""Multi-antenna stacking of the OTFS chain.

Per-antenna delay-Doppler grids are stacked row-wise into an (M*n_t) x N
matrix; its column-stacked vector orders entries symbol-major, then
antenna, then delay bin, i.e. element ``(n*n_t + t)*M + m`` is data symbol
(m, n) of transmit antenna t. Every stacked operator in this module is
aligned to that one layout. All antennas share the same transmit window
and the same receive window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .channel import LtvChannel, assemble_h_matrix, reduce_to_block_channel
from .errors import DimensionError
from .kronops import (
    DenseFactor,
    DftFactor,
    DiagonalFactor,
    IdentityFactor,
    InverseDftFactor,
    KronOperator,
    OperatorChain,
    block_diag,
    vec,
)
from .transceiver import OtfsFrameConfig, WindowSpec


@dataclass(frozen=True)
class MimoConfig:
    frame: OtfsFrameConfig
    num_tx: int = 1
    num_rx: int = 1

    def __post_init__(self):
        if self.num_tx < 1 or self.num_rx < 1:
            raise DimensionError(
                f"antenna counts must be >= 1, got num_tx={self.num_tx}, num_rx={self.num_rx}"
            )

    @property
    def tx_vector_len(self) -> int:
        return self.frame.grid_size * self.num_tx

    @property
    def rx_vector_len(self) -> int:
        return self.frame.grid_size * self.num_rx


def stack_grids(grids: Sequence[np.ndarray], mcfg: MimoConfig) -> np.ndarray:
    """Row-stack per-antenna M x N grids into the (M*n_t) x N data matrix."""
    if len(grids) != mcfg.num_tx:
        raise DimensionError(f"need {mcfg.num_tx} grids, got {len(grids)}")
    m, n = mcfg.frame.num_subcarriers, mcfg.frame.num_symbols
    grids = [np.asarray(g, dtype=np.complex128) for g in grids]
    for i, g in enumerate(grids):
        if g.shape != (m, n):
            raise DimensionError(f"grid {i} has shape {g.shape}, need {m}x{n}")
    return np.concatenate(grids, axis=0)


def split_stacked_vector(v: np.ndarray, mcfg: MimoConfig, antennas: int) -> List[np.ndarray]:
    """Inverse of stacking+vec for a given antenna count: per-antenna M x N grids."""
    m, n = mcfg.frame.num_subcarriers, mcfg.frame.num_symbols
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (m * n * antennas,):
        raise DimensionError(f"expected length {m * n * antennas}, got shape {v.shape}")
    tensor = v.reshape(n, antennas, m)
    return [tensor[:, t, :].T.copy() for t in range(antennas)]


def mimo_isfft(stacked_grid: np.ndarray, mcfg: MimoConfig) -> np.ndarray:
    """Stacked inverse 2-D transform: per-antenna DFT along delay, shared
    inverse DFT along the Doppler axis, then column stacking."""
    m, n = mcfg.frame.num_subcarriers, mcfg.frame.num_symbols
    stacked_grid = np.asarray(stacked_grid, dtype=np.complex128)
    if stacked_grid.shape != (m * mcfg.num_tx, n):
        raise DimensionError(
            f"stacked grid must be {m * mcfg.num_tx}x{n}, got {stacked_grid.shape}"
        )
    per_antenna = stacked_grid.reshape(mcfg.num_tx, m, n)
    out = np.fft.fft(per_antenna, axis=1, norm="ortho").reshape(m * mcfg.num_tx, n)
    return vec(np.fft.ifft(out, axis=1, norm="ortho"))


def mimo_window_diagonal(window: WindowSpec, mcfg: MimoConfig, antennas: int) -> np.ndarray:
    """Diagonal of the stacked window: the single shared per-symbol window,
    repeated across the antenna axis."""
    m, n = mcfg.frame.num_subcarriers, mcfg.frame.num_symbols
    per_symbol = window.diagonal(mcfg.frame).reshape(n, m)
    return np.repeat(per_symbol[:, None, :], antennas, axis=1).reshape(-1)


def mimo_window(x: np.ndarray, window: WindowSpec, mcfg: MimoConfig, antennas: int) -> np.ndarray:
    """Apply the shared window to a stacked time-frequency vector."""
    x = np.asarray(x, dtype=np.complex128)
    diag = mimo_window_diagonal(window, mcfg, antennas)
    if x.shape != diag.shape:
        raise DimensionError(f"expected length {diag.size}, got shape {x.shape}")
    return x * diag


def _validated_channels(channels, mcfg: MimoConfig) -> list:
    if len(channels) != mcfg.num_rx or any(len(row) != mcfg.num_tx for row in channels):
        raise DimensionError(
            f"channel table must be {mcfg.num_rx} x {mcfg.num_tx} (rx-major)"
        )
    table = [[ch for ch in row] for row in channels]
    lengths = {ch.length for row in table for ch in row}
    if len(lengths) != 1:
        raise DimensionError(f"all antenna-pair channels must share one length, got {lengths}")
    for row in table:
        for ch in row:
            if ch.span != mcfg.frame.frame_len:
                raise DimensionError(
                    f"channel span {ch.span} does not match frame length {mcfg.frame.frame_len}"
                )
    return table


def mimo_block_channel(
    channels: Sequence[Sequence[LtvChannel]],
    mcfg: MimoConfig,
    tol: float = 1e-14,
) -> List[np.ndarray]:
    """Per-symbol stacked channel matrices, shape (M*n_r) x (M*n_t).

    Block (r, t) of the n-th matrix is the n-th per-symbol block of the
    (t -> r) antenna-pair channel after CP removal/insertion; each pair's
    reduction is individually verified block diagonal.
    """
    table = _validated_channels(channels, mcfg)
    m, n = mcfg.frame.num_subcarriers, mcfg.frame.num_symbols
    per_pair = [
        [reduce_to_block_channel(assemble_h_matrix(ch), mcfg.frame, tol=tol) for ch in row]
        for row in table
    ]
    stacked = []
    for sym in range(n):
        block = np.zeros((m * mcfg.num_rx, m * mcfg.num_tx), dtype=np.complex128)
        for r in range(mcfg.num_rx):
            for t in range(mcfg.num_tx):
                block[r * m:(r + 1) * m, t * m:(t + 1) * m] = per_pair[r][t][sym]
        stacked.append(block)
    return stacked


@dataclass
class MimoChainResult:
    """Intermediate signals of one stage-by-stage MIMO transmission."""

    stacked_grid: np.ndarray      # (M*n_t) x N input
    tf_signal: np.ndarray         # stacked time-frequency vector
    tx_windowed: np.ndarray
    modulated: List[np.ndarray]   # per-tx-antenna time-domain frames with CP
    received: List[np.ndarray]    # per-rx-antenna channel outputs plus noise
    demodulated: np.ndarray       # stacked post-CP-removal, post-DFT vector
    rx_windowed: np.ndarray
    estimate: np.ndarray          # stacked estimate, length M*N*n_r

    def estimate_grids(self, mcfg: MimoConfig) -> List[np.ndarray]:
        return split_stacked_vector(self.estimate, mcfg, mcfg.num_rx)


def mimo_chain(
    stacked_grid: np.ndarray,
    channels: Sequence[Sequence[LtvChannel]],
    tx_window: WindowSpec,
    rx_window: WindowSpec,
    mcfg: MimoConfig,
    noise: Optional[Sequence[np.ndarray]] = None,
) -> MimoChainResult:
    """Run the stacked transmit/channel/receive chain sample by sample.

    The channel step is the physical one: each receive antenna sees the
    superposition of every transmit antenna's frame through its own
    time-varying channel, plus optional per-antenna noise.
    """
    table = _validated_channels(channels, mcfg)
    frame = mcfg.frame
    m, n, cp = frame.num_subcarriers, frame.num_symbols, frame.cp_len
    tf_signal = mimo_isfft(np.asarray(stacked_grid, dtype=np.complex128), mcfg)
    tx_windowed = mimo_window(tf_signal, tx_window, mcfg, mcfg.num_tx)

    time_blocks = np.fft.ifft(tx_windowed.reshape(n * mcfg.num_tx, m), axis=1, norm="ortho")
    per_symbol = time_blocks.reshape(n, mcfg.num_tx, m)
    modulated = []
    for t in range(mcfg.num_tx):
        blocks = per_symbol[:, t, :]
        with_cp = np.concatenate([blocks[:, m - cp:], blocks], axis=1)
        modulated.append(with_cp.reshape(-1))

    if noise is not None and len(noise) != mcfg.num_rx:
        raise DimensionError(f"need {mcfg.num_rx} noise vectors, got {len(noise)}")
    received = []
    for r in range(mcfg.num_rx):
        out = np.zeros(frame.frame_len, dtype=np.complex128)
        for t in range(mcfg.num_tx):
            out += table[r][t].apply(modulated[t])
        if noise is not None:
            w = np.asarray(noise[r], dtype=np.complex128)
            if w.shape != (frame.frame_len,):
                raise DimensionError(f"noise vectors must have length {frame.frame_len}")
            out = out + w
        received.append(out)

    body = np.stack(
        [rx.reshape(n, frame.symbol_len)[:, cp:] for rx in received], axis=1)
    demodulated = np.fft.fft(body.reshape(n * mcfg.num_rx, m), axis=1, norm="ortho").reshape(-1)
    rx_windowed = mimo_window(demodulated, rx_window, mcfg, mcfg.num_rx)
    final = KronOperator([
        DftFactor(n), IdentityFactor(mcfg.num_rx), InverseDftFactor(m),
    ])
    estimate = final.apply(rx_windowed)
    return MimoChainResult(
        stacked_grid=np.asarray(stacked_grid, dtype=np.complex128),
        tf_signal=tf_signal,
        tx_windowed=tx_windowed,
        modulated=modulated,
        received=received,
        demodulated=demodulated,
        rx_windowed=rx_windowed,
        estimate=estimate,
    )


def mimo_effective_operator(
    channels: Sequence[Sequence[LtvChannel]],
    tx_window: WindowSpec,
    rx_window: WindowSpec,
    mcfg: MimoConfig,
) -> OperatorChain:
    """Noiseless stacked end-to-end map as factorized stages: transforms and
    windows as Kronecker factors around the per-symbol block channel."""
    frame = mcfg.frame
    m, n = frame.num_subcarriers, frame.num_symbols
    block = block_diag(mimo_block_channel(channels, mcfg))
    return OperatorChain([
        KronOperator([DftFactor(n), IdentityFactor(mcfg.num_rx), InverseDftFactor(m)]),
        KronOperator([DiagonalFactor(mimo_window_diagonal(rx_window, mcfg, mcfg.num_rx))]),
        KronOperator([IdentityFactor(n * mcfg.num_rx), DftFactor(m)]),
        KronOperator([DenseFactor(block)]),
        KronOperator([IdentityFactor(n * mcfg.num_tx), InverseDftFactor(m)]),
        KronOperator([DiagonalFactor(mimo_window_diagonal(tx_window, mcfg, mcfg.num_tx))]),
        KronOperator([InverseDftFactor(n), IdentityFactor(mcfg.num_tx), DftFactor(m)]),
    ])


def mimo_effective_matrix(
    channels: Sequence[Sequence[LtvChannel]],
    tx_window: WindowSpec,
    rx_window: WindowSpec,
    mcfg: MimoConfig,
) -> np.ndarray:
    """Dense (M*N*n_r) x (M*N*n_t) matrix whose action on the stacked data
    vector equals the noiseless chain."""
    return mimo_effective_operator(channels, tx_window, rx_window, mcfg).materialize()
