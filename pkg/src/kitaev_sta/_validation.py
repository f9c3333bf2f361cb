import numbers

import numpy as np
from sklearn.utils import check_array

TIME_SLACK = 1e-12


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite number > 0, got {value!r}")
    return float(value)


def check_times(t, tau):
    """Validate sample times as a finite 1-d float array inside [0, tau]."""
    t = check_array(np.atleast_1d(t), ensure_2d=False, dtype=np.float64,
                    ensure_all_finite=True, ensure_min_samples=1)
    if t.ndim != 1:
        raise ValueError(f"times must be 1-d, got shape {t.shape}")
    slack = TIME_SLACK * max(1.0, tau)
    if t.min() < -slack or t.max() > tau + slack:
        raise ValueError(f"times must lie in [0, {tau}]")
    return np.clip(t, 0.0, tau)


def check_state(amplitudes, dim=None, atol=1e-10):
    psi = np.asarray(amplitudes, dtype=np.complex128)
    if psi.ndim != 1:
        raise ValueError("state must be a 1-d amplitude vector")
    if dim is not None and psi.size != dim:
        raise ValueError(f"state has dimension {psi.size}, expected {dim}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > atol:
        raise ValueError(f"state is not normalized (norm = {norm:.3e})")
    return psi
