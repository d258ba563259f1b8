"""Network weights interchange: the .bwnn container and a numpy forward pass.

A .bwnn file is: an 8-byte little-endian unsigned header length, a UTF-8
JSON header, then the weight blobs concatenated in walk order as raw
row-major little-endian float32. The header describes the layer graph and
carries everything needed to run a prediction on a raw curve: the input
step count d, the curve channel normalization ranges, and the name/bounds
of each predicted parameter.

Layer kinds: conv2d (stride 1, 'same' zero padding with the extra cell on
the bottom/right, kernel stored (kh, kw, cin, cout)), maxpool2d (stride =
pool size, 'valid'), flatten (row-major over (h, w, c)), dense (kernel
stored (cin, units)), and parallel (a list of branches evaluated on the
same input, each ending flattened, concatenated in order). Weighted layers
contribute kernel-then-bias to the blob stream, branches in listed order.

Activations: relu, sigmoid, or linear. All arithmetic is float32 to match
the training runtime.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT_NAME = "bwnn"
FORMAT_VERSION = 1

_ACTIVATIONS = ("relu", "sigmoid", "linear")


def bsc_dgd_layers(n_out: int) -> list[dict]:
    """Layer graph of the small curve-to-parameters network."""
    return [
        {"kind": "conv2d", "name": "conv1", "kernel": [2, 2, 1, 4],
         "activation": "relu", "padding": "same"},
        {"kind": "maxpool2d", "name": "pool1", "pool": [2, 1]},
        {"kind": "conv2d", "name": "conv2", "kernel": [4, 2, 4, 8],
         "activation": "relu", "padding": "same"},
        {"kind": "maxpool2d", "name": "pool2", "pool": [2, 1]},
        {"kind": "flatten", "name": "flat"},
        {"kind": "dense", "name": "dense1", "units": 256, "activation": "relu"},
        {"kind": "dense", "name": "dense2", "units": 32, "activation": "relu"},
        {"kind": "dense", "name": "out", "units": n_out, "activation": "sigmoid"},
    ]


def _pch_branch(tag: str, kh: int) -> list[dict]:
    return [
        {"kind": "conv2d", "name": f"{tag}conv1", "kernel": [kh, 2, 1, 8],
         "activation": "relu", "padding": "same"},
        {"kind": "maxpool2d", "name": f"{tag}pool1", "pool": [2, 1]},
        {"kind": "conv2d", "name": f"{tag}conv2", "kernel": [kh, 2, 8, 16],
         "activation": "relu", "padding": "same"},
        {"kind": "maxpool2d", "name": f"{tag}pool2", "pool": [2, 1]},
        {"kind": "conv2d", "name": f"{tag}conv3", "kernel": [kh, 2, 16, 32],
         "activation": "relu", "padding": "same"},
        {"kind": "maxpool2d", "name": f"{tag}pool3", "pool": [2, 1]},
        {"kind": "flatten", "name": f"{tag}flat"},
    ]


def pch_layers(n_out: int = 6) -> list[dict]:
    """Layer graph of the pinching network: two receptive-field branches."""
    return [
        {"kind": "parallel", "name": "paths",
         "branches": [_pch_branch("a", 2), _pch_branch("b", 16)]},
        {"kind": "dense", "name": "dense1", "units": 1024, "activation": "relu"},
        {"kind": "dense", "name": "dense2", "units": 256, "activation": "relu"},
        {"kind": "dense", "name": "dense3", "units": 64, "activation": "relu"},
        {"kind": "dense", "name": "dense4", "units": 16, "activation": "relu"},
        {"kind": "dense", "name": "out", "units": n_out, "activation": "sigmoid"},
    ]


def _walk(layers):
    for layer in layers:
        if layer["kind"] == "parallel":
            for branch in layer["branches"]:
                yield from _walk(branch)
        else:
            yield layer


def _shape_after(layers, shape):
    """Propagate an (h, w, c) shape through a layer list; flatten yields int."""
    for layer in layers:
        kind = layer["kind"]
        if kind == "conv2d":
            kh, kw, cin, cout = layer["kernel"]
            h, w, c = shape
            if c != cin:
                raise ValueError(
                    f"{layer.get('name', kind)}: expects {cin} channels, got {c}")
            shape = (h, w, cout)
        elif kind == "maxpool2d":
            ph, pw = layer["pool"]
            h, w, c = shape
            if h < ph or w < pw:
                raise ValueError(f"{layer.get('name', kind)}: input too small")
            shape = (h // ph, w // pw, c)
        elif kind == "flatten":
            h, w, c = shape
            shape = h * w * c
        elif kind == "dense":
            if not isinstance(shape, int):
                raise ValueError("dense needs a flattened input")
            shape = int(layer["units"])
        elif kind == "parallel":
            sizes = []
            for branch in layer["branches"]:
                out = _shape_after(branch, shape)
                if not isinstance(out, int):
                    raise ValueError("parallel branches must end flattened")
                sizes.append(out)
            shape = sum(sizes)
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
    return shape


def _weight_shapes(layers, shape):
    """Yield (layer, [array shapes]) for weighted layers, in walk order."""
    for layer in layers:
        kind = layer["kind"]
        if kind == "conv2d":
            kh, kw, cin, cout = layer["kernel"]
            yield layer, [(kh, kw, cin, cout), (cout,)]
            shape = (shape[0], shape[1], cout)
        elif kind == "maxpool2d":
            ph, pw = layer["pool"]
            shape = (shape[0] // ph, shape[1] // pw, shape[2])
        elif kind == "flatten":
            shape = shape[0] * shape[1] * shape[2]
        elif kind == "dense":
            units = int(layer["units"])
            yield layer, [(shape, units), (units,)]
            shape = units
        elif kind == "parallel":
            sizes = []
            for branch in layer["branches"]:
                yield from _weight_shapes(branch, shape)
                sizes.append(_shape_after(branch, shape))
            shape = sum(sizes)


@dataclass(frozen=True)
class WeightsFile:
    """Parsed .bwnn container: header metadata plus weight arrays."""

    category: str
    architecture: str
    d: int
    param_names: tuple[str, ...]
    param_lo: np.ndarray
    param_hi: np.ndarray
    u_range: tuple[float, float]
    f_range: tuple[float, float]
    layers: list
    weights: dict  # layer name -> list of float32 arrays
    history: dict | None = None  # loading history the net was trained on

    @property
    def n_out(self) -> int:
        return len(self.param_names)


def write_weights(path: str | Path, *, category: str, architecture: str,
                  d: int, layers: list, weights: dict, param_names,
                  param_lo, param_hi, u_range, f_range,
                  history: dict | None = None) -> None:
    """Serialize a layer graph and its weights to a .bwnn file."""
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "category": category,
        "architecture": architecture,
        "d": int(d),
        "input_shape": [int(d), 2, 1],
        "param_names": list(param_names),
        "param_lo": [float(x) for x in param_lo],
        "param_hi": [float(x) for x in param_hi],
        "u_range": [float(u_range[0]), float(u_range[1])],
        "f_range": [float(f_range[0]), float(f_range[1])],
        "history": history,
        "layers": layers,
    }
    blob = bytearray()
    for layer, shapes in _weight_shapes(layers, (int(d), 2, 1)):
        arrays = weights[layer["name"]]
        if len(arrays) != len(shapes):
            raise ValueError(f"{layer['name']}: expected {len(shapes)} arrays")
        for arr, shape in zip(arrays, shapes):
            arr = np.asarray(arr, dtype=np.float32)
            if arr.shape != tuple(shape):
                raise ValueError(
                    f"{layer['name']}: array shape {arr.shape} != {shape}")
            blob += arr.astype("<f4").tobytes(order="C")
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        fh.write(bytes(blob))


def read_weights(path: str | Path) -> WeightsFile:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ValueError("truncated weights file")
    (head_len,) = struct.unpack("<Q", raw[:8])
    if len(raw) < 8 + head_len:
        raise ValueError("truncated weights header")
    header = json.loads(raw[8:8 + head_len].decode("utf-8"))
    if header.get("format") != FORMAT_NAME or header.get("version") != FORMAT_VERSION:
        raise ValueError("not a supported weights container")
    d = int(header["d"])
    layers = header["layers"]
    blob = raw[8 + head_len:]
    weights: dict = {}
    offset = 0
    for layer, shapes in _weight_shapes(layers, (d, 2, 1)):
        arrays = []
        for shape in shapes:
            size = int(np.prod(shape)) * 4
            if offset + size > len(blob):
                raise ValueError(f"{layer['name']}: weight blob truncated")
            arr = np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape)),
                                offset=offset).reshape(shape)
            arrays.append(arr)
            offset += size
        weights[layer["name"]] = arrays
    if offset != len(blob):
        raise ValueError(f"{len(blob) - offset} trailing bytes after weights")
    names = tuple(header["param_names"])
    out_units = _shape_after(layers, (d, 2, 1))
    if out_units != len(names):
        raise ValueError(
            f"network emits {out_units} values for {len(names)} parameters")
    return WeightsFile(
        category=header["category"],
        architecture=header["architecture"],
        d=d,
        param_names=names,
        param_lo=np.array(header["param_lo"], dtype=float),
        param_hi=np.array(header["param_hi"], dtype=float),
        u_range=(float(header["u_range"][0]), float(header["u_range"][1])),
        f_range=(float(header["f_range"][0]), float(header["f_range"][1])),
        layers=layers,
        weights=weights,
        history=header.get("history"),
    )


def _conv2d_same(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    kh, kw, cin, cout = kernel.shape
    h, w, _ = x.shape
    pt = (kh - 1) // 2
    pl = (kw - 1) // 2
    xp = np.zeros((h + kh - 1, w + kw - 1, cin), dtype=np.float32)
    xp[pt:pt + h, pl:pl + w, :] = x
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(0, 1))
    # windows: (h, w, cin, kh, kw); contract against kernel (kh, kw, cin, cout)
    out = np.einsum("hwckl,klco->hwo", windows, kernel, dtype=np.float32)
    return out + bias


def _maxpool2d(x: np.ndarray, ph: int, pw: int) -> np.ndarray:
    h, w, c = x.shape
    hh = h // ph
    ww = w // pw
    x = x[:hh * ph, :ww * pw, :]
    return x.reshape(hh, ph, ww, pw, c).max(axis=(1, 3))


def _activate(x: np.ndarray, name: str) -> np.ndarray:
    if name == "relu":
        return np.maximum(x, np.float32(0.0))
    if name == "sigmoid":
        return (np.float32(1.0) / (np.float32(1.0) + np.exp(-x))).astype(np.float32)
    if name == "linear":
        return x
    raise ValueError(f"unknown activation {name!r}")


def _forward_layers(x, layers, weights):
    for layer in layers:
        kind = layer["kind"]
        if kind == "conv2d":
            kernel, bias = weights[layer["name"]]
            x = _activate(_conv2d_same(x, kernel, bias), layer["activation"])
        elif kind == "maxpool2d":
            ph, pw = layer["pool"]
            x = _maxpool2d(x, ph, pw)
        elif kind == "flatten":
            x = x.reshape(-1)
        elif kind == "dense":
            kernel, bias = weights[layer["name"]]
            x = _activate(x @ kernel + bias, layer["activation"])
        elif kind == "parallel":
            parts = [_forward_layers(x, branch, weights)
                     for branch in layer["branches"]]
            x = np.concatenate(parts)
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
    return x


def forward(wf: WeightsFile, x: np.ndarray) -> np.ndarray:
    """Run the network on one normalized input of shape (d, 2)."""
    x = np.asarray(x, dtype=np.float32)
    if x.shape != (wf.d, 2):
        raise ValueError(f"expected input shape ({wf.d}, 2), got {x.shape}")
    return np.asarray(_forward_layers(x.reshape(wf.d, 2, 1), wf.layers,
                                      wf.weights), dtype=np.float32)


def predict_params(wf: WeightsFile, u: np.ndarray, f: np.ndarray) -> dict:
    """Predict physical parameter values from one raw curve.

    u (meters) and f (m/s^2) are the d post-rest curve points; they are
    normalized by the ranges recorded at training time, pushed through the
    network, and the sigmoid outputs are mapped back to physical units by
    the stored parameter bounds.
    """
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    if u.shape != (wf.d,) or f.shape != (wf.d,):
        raise ValueError(f"expected {wf.d} curve points")
    u_lo, u_hi = wf.u_range
    f_lo, f_hi = wf.f_range
    if not (u_hi > u_lo and f_hi > f_lo):
        raise ValueError("degenerate normalization ranges in weights file")
    x = np.stack([(u - u_lo) / (u_hi - u_lo), (f - f_lo) / (f_hi - f_lo)], axis=1)
    out = forward(wf, x).astype(float)
    values = wf.param_lo + out * (wf.param_hi - wf.param_lo)
    return dict(zip(wf.param_names, values.tolist()))
