"""Backend dispatch for the hot kernels.

Imports the implementation module chosen by `inksig.backend` and
re-exports its functions. Everything above this layer is backend
agnostic.
"""

from . import backend

if backend.USE_NUMBA:
    from . import _numba_kernels as _impl
else:
    from . import _numpy_kernels as _impl

BACKEND = backend.BACKEND

segment_signature_flat = _impl.segment_signature_flat
chen_concat_flat = _impl.chen_concat_flat
path_signature_flat = _impl.path_signature_flat
windowed_signatures_flat = _impl.windowed_signatures_flat
paint_maps_last = _impl.paint_maps_last
paint_maps_maxmag = _impl.paint_maps_maxmag
conv2d_forward = _impl.conv2d_forward
conv2d_input_grad = _impl.conv2d_input_grad
conv2d_param_grad = _impl.conv2d_param_grad
maxpool2_forward = _impl.maxpool2_forward
maxpool2_input_grad = _impl.maxpool2_input_grad
