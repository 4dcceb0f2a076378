"""Molecules, vibrational modes, logic ions and the built-in catalog."""
from __future__ import annotations

import hashlib
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path

from .errors import CatalogError, NotFound
from .physics import DALTON, lamb_dicke, wavelength_to_wavevector, wavenumber_to_wavevector

CATALOG_ENV = "QLS_CATALOG"
MODE_MODELS = ("harmonic", "two_level")


@dataclass(frozen=True)
class VibrationalMode:
    label: str
    frequency: float  # cm^-1
    ir_intensity: float = 0.0  # km/mol; 0 marks a bright mode of unit strength
    model: str = "harmonic"
    exp_frequencies: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError(f"mode {self.label}: frequency must be positive")
        if self.ir_intensity < 0:
            raise ValueError(f"mode {self.label}: IR intensity must be non-negative")
        if self.model not in MODE_MODELS:
            raise ValueError(f"mode {self.label}: unknown model {self.model!r}")

    @property
    def transition_moment(self) -> float:
        """Relative dipole, sqrt of the IR intensity (1 for the zero sentinel)."""
        return math.sqrt(self.ir_intensity) if self.ir_intensity > 0 else 1.0


@dataclass(frozen=True)
class MoleculeSpec:
    name: str
    mass: float  # Dalton
    modes: tuple[VibrationalMode, ...]
    default_ion: str | None = None

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"{self.name}: mass must be positive")
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"{self.name}: duplicate mode labels")

    def mode(self, label: str | None = None) -> VibrationalMode:
        """Mode by label; without a label, the strongest (first on ties)."""
        if label is None:
            return max(self.modes, key=lambda m: m.ir_intensity)
        for m in self.modes:
            if m.label == label:
                return m
        raise NotFound(f"molecule {self.name} has no mode {label!r}")


@dataclass(frozen=True)
class LogicIon:
    name: str
    mass: float  # Dalton
    control_wavelength: float  # m

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"{self.name}: mass must be positive")
        if not self.control_wavelength > 0:
            raise ValueError(f"{self.name}: control wavelength must be positive")


@dataclass(frozen=True)
class IonCrystal:
    molecule: MoleculeSpec
    ion: LogicIon
    trap_frequency: float = 2 * math.pi * 500e3  # rad/s

    def __post_init__(self):
        ratio = self.molecule.mass / self.ion.mass
        if not 0.5 <= ratio <= 2.0:
            warnings.warn(
                f"{self.molecule.name}/{self.ion.name} mass ratio {ratio:.2f} is outside [0.5, 2]",
                stacklevel=2,
            )

    @property
    def total_mass(self) -> float:
        """Crystal mass in kg."""
        return (self.molecule.mass + self.ion.mass) * DALTON


def eta_probe(crystal: IonCrystal, probe_wavenumber: float, theta: float = 0.0) -> float:
    """Lamb-Dicke parameter of the infrared probe light at ``probe_wavenumber`` cm^-1."""
    k = wavenumber_to_wavevector(probe_wavenumber)
    return lamb_dicke(k, crystal.total_mass, crystal.trap_frequency, theta)


def eta_control(crystal: IonCrystal, theta: float = 0.0) -> float:
    """Lamb-Dicke parameter of the logic-ion control beam at overlap angle ``theta``."""
    k = wavelength_to_wavevector(crystal.ion.control_wavelength)
    return lamb_dicke(k, crystal.total_mass, crystal.trap_frequency, theta)


# --- catalog ----------------------------------------------------------------

_MOLECULE_KEYS = {"name", "mass_da", "modes"}
_MOLECULE_OPTIONAL = {"default_ion"}
_MODE_KEYS = {"label", "freq_cm1", "ir_km_mol"}
_MODE_OPTIONAL = {"model", "exp_freq_cm1"}
_ION_KEYS = {"name", "mass_da", "control_wavelength_nm"}


@dataclass(frozen=True)
class Catalog:
    molecules: tuple[MoleculeSpec, ...]
    ions: tuple[LogicIon, ...]
    source: str = field(default="builtin", compare=False)

    def molecule(self, name: str) -> MoleculeSpec:
        for m in self.molecules:
            if m.name == name:
                return m
        raise NotFound(f"molecule {name!r} not found")

    def ion(self, name: str) -> LogicIon:
        for i in self.ions:
            if i.name == name:
                return i
        raise NotFound(f"ion {name!r} not found")

    def crystal(self, molecule: str, ion: str | None = None,
                trap_frequency: float = 2 * math.pi * 500e3) -> IonCrystal:
        mol = self.molecule(molecule)
        ion_name = ion or mol.default_ion
        if ion_name is None:
            raise NotFound(f"molecule {molecule!r} has no default ion; pass one explicitly")
        return IonCrystal(mol, self.ion(ion_name), trap_frequency)

    def to_dict(self) -> dict:
        mols = []
        for m in self.molecules:
            entry = {"name": m.name, "mass_da": m.mass}
            if m.default_ion is not None:
                entry["default_ion"] = m.default_ion
            modes = []
            for v in m.modes:
                mode = {"label": v.label, "freq_cm1": v.frequency, "ir_km_mol": v.ir_intensity}
                if v.model != "harmonic":
                    mode["model"] = v.model
                if v.exp_frequencies:
                    mode["exp_freq_cm1"] = list(v.exp_frequencies)
                modes.append(mode)
            entry["modes"] = modes
            mols.append(entry)
        ions = [{"name": i.name, "mass_da": i.mass,
                 "control_wavelength_nm": _nm(i.control_wavelength)} for i in self.ions]
        return {"molecules": mols, "ions": ions}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _nm(wavelength_m: float):
    nm = wavelength_m * 1e9
    return int(round(nm)) if abs(nm - round(nm)) < 1e-9 else nm


def _check_keys(obj: dict, required: set, optional: set, where: str, strict: bool) -> None:
    if not isinstance(obj, dict):
        raise CatalogError(f"{where}: expected an object")
    missing = required - obj.keys()
    if missing:
        raise CatalogError(f"{where}: missing keys {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        msg = f"{where}: unknown keys {sorted(unknown)}"
        if strict:
            raise CatalogError(msg)
        warnings.warn(msg, stacklevel=3)


def catalog_from_dict(doc: dict, strict: bool = False, source: str = "<dict>") -> Catalog:
    _check_keys(doc, {"molecules", "ions"}, set(), "catalog", strict)
    try:
        ions = []
        for i, entry in enumerate(doc["ions"]):
            _check_keys(entry, _ION_KEYS, set(), f"ions[{i}]", strict)
            ions.append(LogicIon(entry["name"], entry["mass_da"], entry["control_wavelength_nm"] * 1e-9))
        mols = []
        for i, entry in enumerate(doc["molecules"]):
            _check_keys(entry, _MOLECULE_KEYS, _MOLECULE_OPTIONAL, f"molecules[{i}]", strict)
            modes = []
            for j, m in enumerate(entry["modes"]):
                _check_keys(m, _MODE_KEYS, _MODE_OPTIONAL, f"molecules[{i}].modes[{j}]", strict)
                modes.append(VibrationalMode(m["label"], m["freq_cm1"], m["ir_km_mol"],
                                             m.get("model", "harmonic"),
                                             tuple(m.get("exp_freq_cm1", ()))))
            mols.append(MoleculeSpec(entry["name"], entry["mass_da"], tuple(modes), entry.get("default_ion")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CatalogError):
            raise
        raise CatalogError(str(exc)) from exc
    names = [m.name for m in mols]
    if len(set(names)) != len(names):
        raise CatalogError("duplicate molecule names")
    cat = Catalog(tuple(mols), tuple(ions), source)
    for m in mols:
        if m.default_ion is not None and m.default_ion not in {i.name for i in ions}:
            raise CatalogError(f"{m.name}: default ion {m.default_ion!r} not in catalog")
    return cat


def load_catalog(path: str | os.PathLike | None = None, strict: bool = False) -> Catalog:
    """Load a catalog file; defaults to $QLS_CATALOG, then the built-in one."""
    if path is None:
        path = os.environ.get(CATALOG_ENV) or None
    if path is None:
        return builtin_catalog()
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: {exc}") from exc
    return catalog_from_dict(doc, strict=strict, source=str(path))


def builtin_catalog() -> Catalog:
    text = files("qls").joinpath("data/catalog.json").read_text(encoding="utf-8")
    return catalog_from_dict(json.loads(text), strict=True, source="builtin")
