"""Regenerate the bundled fixtures under src/bwlab/fixtures/.

Everything here is deterministic (fixed seeds, fine integration settings)
so the committed files can be reproduced byte for byte. Run from the
repository root:

    python3 scripts/gen_fixtures.py
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy import signal

from bwlab import (BwParams, GroundMotion, IdaConfig, ida, nnio,
                   simulate_quasi_static)
from bwlab.dynamics import PushoverCurve

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "bwlab" / "fixtures"

# steel-frame-like plain Bouc-Wen specimen, u_y close to 14 cm
SPECIMEN_BW = BwParams(T=1.0, F_y=0.5634, alpha=0.05, beta=0.5, n=1.5,
                       variant="BW")
# concrete-like full-model specimen, u_y close to 4.4 cm
SPECIMEN_MBWBN = BwParams(T=0.5, F_y=0.7083, alpha=0.03, beta=0.6, n=1.2,
                          delta_nu=0.18, delta_eta=0.20, zeta0=0.8, p=0.7,
                          q=0.15, psi=0.3, delta_psi=0.02, lam=0.2,
                          variant="mBWBN")


def write_specimens():
    for name, spec in (("specimen_bw", SPECIMEN_BW),
                       ("specimen_mbwbn", SPECIMEN_MBWBN)):
        with open(FIXTURES / f"{name}.json", "w") as fh:
            json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_pushover():
    # fine-step capacity curve of the plain specimen, out to 8 u_y
    spec = SPECIMEN_BW
    series = np.linspace(0.0, 8.0 * spec.u_y, 801)
    curve = simulate_quasi_static(spec, series, substeps=64)
    PushoverCurve(u=curve.u, f=curve.f).to_csv(FIXTURES / "pushover_bw.csv")


def make_motion(seed: int, pga_g: float, label: str) -> GroundMotion:
    """Band-limited white noise under a rise/plateau/decay envelope."""
    rng = np.random.default_rng(seed)
    dt = 0.01
    n = 2001
    t = dt * np.arange(n)
    white = rng.standard_normal(n)
    b, a = signal.butter(4, [0.3, 8.0], btype="band", fs=1.0 / dt)
    shaped = signal.lfilter(b, a, white)
    env = np.where(t < 4.0, (t / 4.0) ** 2,
                   np.where(t <= 10.0, 1.0, np.exp(-0.4 * (t - 10.0))))
    accel = shaped * env
    accel *= pga_g / np.max(np.abs(accel))
    return GroundMotion(dt=dt, accel_g=accel, label=label)


def write_motions() -> list[GroundMotion]:
    specs = [(101, 0.35, "gm_a"), (202, 0.30, "gm_b"), (303, 0.40, "gm_c")]
    motions = []
    for seed, pga, label in specs:
        gm = make_motion(seed, pga, label)
        gm.write(FIXTURES / f"{label}.txt")
        motions.append(gm)
    return motions


def write_ida(motions):
    config = IdaConfig(sa_levels=(0.1, 0.2, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0))
    result = ida(SPECIMEN_MBWBN, motions, config)
    result.to_csv(FIXTURES / "ida_mbwbn.csv")
    peaks = np.array(result.peak_u_m)
    for thr in (0.02, 0.05, 0.11):
        n_exceed = int(np.sum(np.where(np.isnan(peaks), True, peaks >= thr)))
        print(f"  ida: threshold {thr} m exceeded in {n_exceed}/{peaks.size} cells")


def write_golden():
    """Tiny network exercising every layer kind of the weights container."""
    layers = [
        {"kind": "parallel", "name": "paths", "branches": [
            [
                {"kind": "conv2d", "name": "a1", "kernel": [2, 2, 1, 3],
                 "activation": "relu", "padding": "same"},
                {"kind": "maxpool2d", "name": "ap", "pool": [2, 1]},
                {"kind": "flatten", "name": "af"},
            ],
            [
                {"kind": "conv2d", "name": "b1", "kernel": [3, 2, 1, 2],
                 "activation": "relu", "padding": "same"},
                {"kind": "maxpool2d", "name": "bp", "pool": [2, 1]},
                {"kind": "flatten", "name": "bf"},
            ],
        ]},
        {"kind": "dense", "name": "d1", "units": 7, "activation": "relu"},
        {"kind": "dense", "name": "out", "units": 3, "activation": "sigmoid"},
    ]
    d = 10
    rng = np.random.default_rng(2024)
    weights = {
        "a1": [rng.standard_normal((2, 2, 1, 3)) * 0.5,
               rng.standard_normal(3) * 0.1],
        "b1": [rng.standard_normal((3, 2, 1, 2)) * 0.5,
               rng.standard_normal(2) * 0.1],
        "d1": [rng.standard_normal((50, 7)) * 0.3, rng.standard_normal(7) * 0.1],
        "out": [rng.standard_normal((7, 3)) * 0.5, rng.standard_normal(3) * 0.1],
    }
    path = FIXTURES / "golden_tiny.bwnn"
    nnio.write_weights(
        path, category="GOLDEN", architecture="golden_tiny", d=d,
        layers=layers, weights=weights, param_names=["p1", "p2", "p3"],
        param_lo=[0.0, 0.0, 0.0], param_hi=[1.0, 2.0, 3.0],
        u_range=(-1.0, 1.0), f_range=(-2.0, 2.0),
        history={"label": "golden", "amplitudes_uy": [1.0],
                 "step_size_uy": 0.4})
    wf = nnio.read_weights(path)
    inputs = rng.uniform(-1.0, 1.0, size=(4, d, 2)).astype(np.float32)
    outputs = [nnio.forward(wf, x).tolist() for x in inputs]
    with open(FIXTURES / "golden_tiny_expected.json", "w") as fh:
        json.dump({"inputs": inputs.tolist(), "outputs": outputs},
                  fh, indent=2)
        fh.write("\n")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    print("specimens...")
    write_specimens()
    print("pushover...")
    write_pushover()
    print("ground motions...")
    motions = write_motions()
    print("ida grid...")
    write_ida(motions)
    print("weights golden...")
    write_golden()
    print("done:", sorted(p.name for p in FIXTURES.iterdir()))


if __name__ == "__main__":
    main()
