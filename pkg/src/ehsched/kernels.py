"""Kernel backend selection: compiled extension when available, else pure Python.

Set ``EHSCHED_KERNELS=python`` or ``EHSCHED_KERNELS=compiled`` to force a
backend (``compiled`` raises if the extension was not built).
"""

import os

_forced = os.environ.get("EHSCHED_KERNELS", "").strip().lower()
if _forced not in ("", "python", "compiled"):
    raise RuntimeError(f"EHSCHED_KERNELS must be 'python' or 'compiled', got {_forced!r}")

if _forced == "python":
    from ehsched import _kernels_py as _impl
else:
    try:
        from ehsched import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _forced == "compiled":
            raise
        from ehsched import _kernels_py as _impl

BACKEND = "compiled" if _impl.__name__.endswith("_ckernels") else "python"

awgn_bits_per_time = _impl.awgn_bits_per_time
awgn_solve_duration = _impl.awgn_solve_duration
taut_max_bits = _impl.taut_max_bits
ad_trial = _impl.ad_trial
mad_trial = _impl.mad_trial
