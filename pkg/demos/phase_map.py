#!/usr/bin/env python3
"""Map the deep-squeeze sign correlator over the two squeezing angles.

In the wide-bin, strong-squeezing limit the correlator depends only on
the squeeze phases (phi_a, phi_b) and the rotation difference. The map
below shows its structure: a maximal-correlation ridge along
phi_b = phi_a (E = 1 on the locus, square-root cusp off it), the affine
decay 1 - (2/pi)|2 phi_a + dtheta| along the aligned line, and the sign
flip under a quarter-turn of both phases. Prints an ASCII map and writes
a PNG when matplotlib is installed.

CLI equivalent of the full map:
    squeezebell map --method large-squeeze --ra 8 --dtheta 0 \
        --axis1 phi_a:-1.5:1.5:41 --axis2 phi_b:-1.5:1.5:41

Run:
    python3 demos/phase_map.py
"""

import math

import numpy as np

from squeezebell.evaluators import correlator_large_ell_large_squeeze

GLYPHS = " .:-=+*#%@"
N = 41
DTHETA = 0.0


def main() -> None:
    phis = np.linspace(-1.5, 1.5, N)
    values = np.empty((N, N))
    for i, pa in enumerate(phis):
        for j, pb in enumerate(phis):
            values[i, j] = correlator_large_ell_large_squeeze(
                float(pa), float(pb), DTHETA
            ).value

    print(f"E(phi_a, phi_b) at dtheta = {DTHETA}; rows phi_b (top = +), cols phi_a")
    print("glyph scale [-1, 1]:", " ".join(GLYPHS))
    for j in range(N - 1, -1, -1):
        cells = (values[:, j] + 1.0) / 2.0 * (len(GLYPHS) - 1)
        print("".join(GLYPHS[int(round(c))] for c in cells))

    off_ridge = correlator_large_ell_large_squeeze(0.05, -0.05, DTHETA).value
    print(f"\nridge E(phi, phi)        : {values[N // 2, N // 2]:+.6f} at the center")
    print(f"cusp just off the ridge  : E(0.05, -0.05) = {off_ridge:+.6f} "
          f"(drops as sqrt of the offset)")
    quarter = correlator_large_ell_large_squeeze(0.3 + math.pi / 2, 0.1 + math.pi / 2, DTHETA).value
    print(f"quarter-turn flip        : E(0.3, 0.1) = "
          f"{correlator_large_ell_large_squeeze(0.3, 0.1, DTHETA).value:+.6f}, "
          f"shifted = {quarter:+.6f}")
    _maybe_plot(phis, values)


def _maybe_plot(phis: np.ndarray, values: np.ndarray) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the PNG")
        return
    fig, ax = plt.subplots(figsize=(5.4, 4.5))
    mesh = ax.pcolormesh(phis, phis, values.T, cmap="RdBu_r", vmin=-1.0, vmax=1.0)
    fig.colorbar(mesh, ax=ax, label="E")
    ax.set_xlabel("phi_a")
    ax.set_ylabel("phi_b")
    ax.set_title("deep-squeeze sign correlator")
    fig.tight_layout()
    fig.savefig("phase_map.png", dpi=150)
    print("wrote phase_map.png")


if __name__ == "__main__":
    main()
