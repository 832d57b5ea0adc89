#!/usr/bin/env python3
"""Generate data/ltass_fir.csv, the speech-shaping FIR for test noise.

The target magnitude follows the long-term average speech spectrum (LTASS)
one-third-octave levels reported by Byrne et al. (1994), "An international
comparison of long-term average speech spectra", JASA 96(4), combined
male+female column. Levels are interpolated linearly in log-frequency,
normalized to a 0 dB peak, and realized as a 257-tap linear-phase FIR by
frequency sampling at a 16 kHz design rate with a Hann window.

Run from the repository root:  python3 scripts/make_ltass_fir.py
"""

import numpy as np

LTASS_FREQ_HZ = np.array([
    63, 80, 100, 125, 160, 200, 250, 315, 400, 500, 630, 800,
    1000, 1250, 1600, 2000, 2500, 3150, 4000, 5000, 6300, 8000,
])
LTASS_LEVEL_DB = np.array([
    38.6, 43.5, 54.4, 57.7, 56.8, 60.2, 60.3, 59.0, 62.1, 62.1, 60.5, 56.8,
    53.7, 53.0, 52.0, 48.7, 48.1, 46.8, 45.6, 44.5, 44.3, 43.7,
])

SAMPLE_RATE = 16000.0
NFFT = 4096
TAPS = 257


def target_db(freq):
    """LTASS level at freq, linear in log-frequency, flat beyond the table."""
    f = np.clip(freq, LTASS_FREQ_HZ[0], LTASS_FREQ_HZ[-1])
    return np.interp(np.log(f), np.log(LTASS_FREQ_HZ), LTASS_LEVEL_DB)


def main():
    freqs = np.arange(NFFT // 2 + 1) * SAMPLE_RATE / NFFT
    levels = target_db(np.maximum(freqs, freqs[1]))  # avoid log(0) at DC
    levels -= levels.max()  # normalize peak to 0 dB
    mag = 10.0 ** (levels / 20.0)

    full = np.concatenate([mag, mag[-2:0:-1]])  # conjugate-symmetric, real
    proto = np.fft.ifft(full).real
    delay = TAPS // 2
    idx = (np.arange(TAPS) - delay) % NFFT
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(TAPS) / (TAPS - 1))
    taps = proto[idx] * window

    with open("data/ltass_fir.csv", "w", newline="\n") as out:
        out.write("# Speech-shaping FIR approximating the LTASS of Byrne et al.\n")
        out.write("# (1994), JASA 96(4), combined male+female levels.\n")
        out.write(f"# Linear phase, {TAPS} taps, designed at "
                  f"{SAMPLE_RATE:.0f} Hz by frequency sampling (Hann window),\n")
        out.write("# peak response normalized to 0 dB.\n")
        out.write("# Generated by scripts/make_ltass_fir.py.\n")
        out.write("tap\n")
        for t in taps:
            out.write(f"{t:.9g}\n")
    print(f"wrote data/ltass_fir.csv ({TAPS} taps)")


if __name__ == "__main__":
    main()
