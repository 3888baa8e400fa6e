"""Transducer-device formulas: SAW center frequency and electron-phonon coupling."""

from __future__ import annotations

from dataclasses import dataclass

from scipy.constants import electron_volt, hbar


def ev_to_joules(energy_ev: float) -> float:
    return energy_ev * electron_volt


@dataclass(frozen=True)
class IDTParams:
    """Interdigital-transducer and coupling parameters (SI units).

    The deformation potential is stored in joules; use deformation_potential_ev
    for the conventional eV input.
    """

    finger_width_w: float          # m
    saw_velocity_v_s: float        # m/s
    n_finger_pairs: int = 40
    deformation_potential_j: float | None = None
    effective_mass_m: float | None = None   # kg
    wavenumber_k_m: float | None = None     # 1/m

    def __post_init__(self):
        if self.finger_width_w <= 0 or self.saw_velocity_v_s <= 0:
            raise ValueError("finger width and SAW velocity must be positive")
        if self.n_finger_pairs <= 0:
            raise ValueError("n_finger_pairs must be positive")
        for name in ("deformation_potential_j", "effective_mass_m", "wavenumber_k_m"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def with_ev(cls, finger_width_w, saw_velocity_v_s, deformation_potential_ev,
                effective_mass_m, wavenumber_k_m, n_finger_pairs=40) -> "IDTParams":
        return cls(finger_width_w=finger_width_w, saw_velocity_v_s=saw_velocity_v_s,
                   n_finger_pairs=n_finger_pairs,
                   deformation_potential_j=ev_to_joules(deformation_potential_ev),
                   effective_mass_m=effective_mass_m, wavenumber_k_m=wavenumber_k_m)


def idt_center_frequency(p: IDTParams) -> float:
    """SAW center frequency v_s / (4 w) in Hz.

    The transducer period is four finger widths, so the launched wavelength is
    4w and the center frequency v_s / (4w).
    """
    return p.saw_velocity_v_s / (4.0 * p.finger_width_w)


def electron_phonon_coupling(p: IDTParams, omega_m: float) -> float:
    """Strain-coupling rate D k_m sqrt(hbar / (2 m omega_m)) / hbar in rad/s.

    omega_m is the angular mode frequency in rad/s. The square root is the
    zero-point displacement of the mode; dividing the deformation energy by
    hbar converts it to a rate.
    """
    if omega_m <= 0:
        raise ValueError("omega_m must be positive")
    if p.deformation_potential_j is None or p.effective_mass_m is None \
            or p.wavenumber_k_m is None:
        raise ValueError(
            "coupling requires deformation_potential, effective_mass and wavenumber"
        )
    x_zp = (hbar / (2.0 * p.effective_mass_m * omega_m)) ** 0.5
    return p.deformation_potential_j * p.wavenumber_k_m * x_zp / hbar
