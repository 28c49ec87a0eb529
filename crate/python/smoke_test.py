"""Quick check that the extension imports and agrees with itself."""

import cmath
import json
import math

import pygiantatom as ga


def main():
    assert ga.preset_names() == ["A1", "A2", "A3", "A4", "B1"]

    b1 = ga.GiantAtomParams.preset("B1")
    assert abs(b1.gamma_t() - 2 * math.pi * 4.8e6 * 160e-9) < 1e-12
    back = ga.GiantAtomParams.from_json(b1.to_json())
    assert back.to_json() == b1.to_json()

    # series and integrator agree
    tr = ga.evolve_dde(b1, 4 * b1.delay_t)
    times, values = tr.times(), tr.values()
    for k in range(0, len(tr), 97):
        s = ga.series_amplitude(b1, times[k], "rotating")
        assert abs(s - values[k]) < 1e-6
    peaks = tr.revival_peaks()
    assert len(peaks) >= 2
    assert abs(peaks[0][0] - b1.delay_t) < 0.2 * b1.delay_t
    assert tr.blp() > 0

    # the small atom decays exponentially
    small = ga.GiantAtomParams(2.3e9, 5e6, 0.0, gamma_res_hz=1e6)
    rate = 2 * math.pi * (2 * 5e6 + 1e6)
    t = 1.0 / rate
    assert abs(abs(ga.series_amplitude(small, t)) - math.exp(-1)) < 1e-12

    # spectrum is |chi|^2 scaled by the atom frequency
    f, s0, chi = ga.spectrum_closed(b1, 80e6, 401)
    k = len(f) // 3
    assert abs(s0[k] - 2 * math.pi * b1.omega01_hz * abs(chi[k]) ** 2) < 1e-9 * s0[k]
    assert abs(ga.susceptibility(b1, f[k]) - chi[k]) < 1e-9 * abs(chi[k])

    # lossless scattering conserves power; roots are perfect mirrors
    a4 = ga.GiantAtomParams.preset("A4")
    t_, r_ = ga.saw_coefficients(a4, 2.3e9 + 1.7e6)
    assert abs(abs(t_) ** 2 + abs(r_) ** 2 - 1) < 1e-12
    roots = ga.drive_for_max_reflection(a4, 2.3e9, 2.29e9, 2.31e9)
    assert roots and all(abs(ga.saw_coefficients(a4, w)[0]) < 1e-6 for w in roots)
    assert abs(ga.gate_reflection(ga.GiantAtomParams.preset("A3"), 7e9)) <= 1

    # velocity from a synthetic ridge
    a3 = ga.GiantAtomParams(2.3e9, 5.8e6, 550e-6 / 2906.0)
    drive, atom = ga.synthetic_ridge(a3, 2.285e9, 2.315e9, 121)
    v = ga.fit_velocity(drive, atom, 550e-6)
    assert abs(v / 2906.0 - 1) < 1e-3, v

    # spectrum fit recovers the generating parameters
    peak = max(s0)
    fitted, report = ga.fit_spectrum(f, [x / peak for x in s0], b1, free="gamma,T", restarts=2)
    assert abs(fitted.gamma_hz / b1.gamma_hz - 1) < 1e-3
    assert json.loads(report)["converged"]

    try:
        ga.GiantAtomParams.preset("Z9")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")
    try:
        ga.ift_spectrum(b1, 80e6, 4001)
    except ArithmeticError:
        pass
    else:
        raise AssertionError("narrow window accepted")
    assert cmath.isfinite(values[-1])
    print("smoke test passed")


if __name__ == "__main__":
    main()
