"""High-precision reference energies for the test-suite (writes tests/data/golden.json).

Two families:
  * linear stretchings H = c s between (1, 2) and (c, 2c): closed form
    omega n^(n/2) (a c^n + b) (R^n - r^n) / n evaluated in 40-digit arithmetic;
  * fixed analytic profiles, integrated directly with mpmath quadrature, which
    exercises the Gauss-Legendre evaluation on a non-trivial integrand.

Run: python3 scripts/golden_values.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40


def sphere(n):
    return 2 * mp.pi ** (mp.mpf(n) / 2) / mp.gamma(mp.mpf(n) / 2)


def volume(n, lo, hi):
    return sphere(n) * (mp.mpf(hi) ** n - mp.mpf(lo) ** n) / n


def coefficients(n, r, R, rs, Rs, alpha):
    alpha = mp.mpf(alpha)
    return alpha / volume(n, rs, Rs), (1 - alpha) / volume(n, r, R)


def linear_energy(n, c, alpha):
    a, b = coefficients(n, 1, 2, c, 2 * c, alpha)
    c = mp.mpf(c)
    return sphere(n) * mp.mpf(n) ** (mp.mpf(n) / 2) * (a * c**n + b) * (2**n - 1) / n


def profile_energy(n, r, R, alpha, H, dH):
    rs, Rs = H(mp.mpf(r)), H(mp.mpf(R))
    a, b = coefficients(n, r, R, rs, Rs, alpha)

    def L(s):
        h, k = H(s), dH(s)
        P = (n - 1) * h**2 + s**2 * k**2
        Q = (n - 1) * s**2 * k**2 + h**2
        return a / s * P ** (mp.mpf(n) / 2) + b / h * k ** (1 - n) * Q ** (mp.mpf(n) / 2)

    return sphere(n) * mp.quad(L, [r, R])


PROFILES = {
    "square": (lambda s: s**2, lambda s: 2 * s),
    "sqrt": (lambda s: mp.sqrt(s), lambda s: 1 / (2 * mp.sqrt(s))),
    "exp": (lambda s: mp.exp(s), lambda s: mp.exp(s)),
}


def main():
    linear = []
    for n in (2, 3, 4, 5):
        for c in ("0.5", "1", "3"):
            for alpha in ("0.3", "0.5", "0.7"):
                linear.append({"n": n, "c": float(c), "alpha": float(alpha),
                               "energy": mp.nstr(linear_energy(n, mp.mpf(c), alpha), 25)})
    shaped = []
    for name, (H, dH) in PROFILES.items():
        for n in (2, 3, 4):
            for alpha in ("0.25", "0.6"):
                shaped.append({"profile": name, "n": n, "r": 1.0, "R": 2.0,
                               "alpha": float(alpha),
                               "energy": mp.nstr(profile_energy(n, 1, 2, alpha, H, dH), 25)})
    out = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps({"linear": linear, "profiles": shaped}, indent=1) + "\n")
    print(f"wrote {len(linear) + len(shaped)} values to {out}")


if __name__ == "__main__":
    main()
