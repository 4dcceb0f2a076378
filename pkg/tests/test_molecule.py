import json
import math
import warnings

import pytest
from hypothesis import given, strategies as st

from qls.errors import CatalogError, NotFound
from qls.molecule import (
    IonCrystal,
    builtin_catalog,
    catalog_from_dict,
    eta_control,
    eta_probe,
    load_catalog,
)

# mpmath evaluations of k * sqrt(hbar / (2 m w_t)) at 500 kHz
ETA_C3HN_3259 = 0.021580779637315827
ETA_NH3_3498 = 0.029267514565257707
ETA_C3HN_CONTROL = 0.09083542267173537
ETA_PHE_CONTROL = 0.021346822072438626


@pytest.fixture(scope="module")
def catalog():
    return builtin_catalog()


def test_table_entries(catalog):
    nu3 = catalog.molecule("C3HN+").mode("nu3")
    assert (nu3.frequency, nu3.ir_intensity) == (1890, 334)
    nh3 = catalog.molecule("NH3+")
    assert nh3.mass == 17 and nh3.mode("nu1").frequency == 3498 and nh3.default_ion == "Ca40"
    assert [m.frequency for m in catalog.molecule("C3HN+").modes] == [3259, 2206, 1890, 911]
    assert catalog.molecule("C3HN+").mode("nu1").exp_frequencies == (3196.5, 3123)


def test_lookup_failure(catalog):
    with pytest.raises(NotFound):
        catalog.molecule("Xe")
    with pytest.raises(NotFound):
        catalog.molecule("C3HN+").mode("nu9")


def test_strongest_mode_default(catalog):
    assert catalog.molecule("C3HN+").mode().label == "nu3"


def test_eta_probe_values(catalog):
    c3hn = catalog.crystal("C3HN+")
    assert eta_probe(c3hn, 3259) == pytest.approx(ETA_C3HN_3259, rel=1e-12)
    assert abs(eta_probe(c3hn, 3259) - 0.02158) < 1e-4
    assert abs(eta_probe(c3hn, 3259, math.pi / 2)) < 1e-17
    nh3 = catalog.crystal("NH3+")
    assert eta_probe(nh3, 3498) == pytest.approx(ETA_NH3_3498, rel=1e-12)
    assert abs(eta_probe(nh3, 3498) - 0.02927) < 2e-4


def test_eta_control_values(catalog):
    c3hn = catalog.crystal("C3HN+")
    assert eta_control(c3hn) == pytest.approx(ETA_C3HN_CONTROL, rel=1e-12)
    assert eta_control(c3hn, math.pi / 3) == pytest.approx(ETA_C3HN_CONTROL / 2, rel=1e-12)
    phe = catalog.crystal("C9H11NO2+")
    assert phe.ion.name == "Ba138"
    assert eta_control(phe) == pytest.approx(ETA_PHE_CONTROL, rel=1e-12)
    assert abs(eta_control(phe) - 0.02133) < 2e-4


def test_mass_ratio_warning(catalog):
    with pytest.warns(UserWarning, match="mass ratio"):
        IonCrystal(catalog.molecule("NH3+"), catalog.ion("Ca40"))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        IonCrystal(catalog.molecule("C3HN+"), catalog.ion("Ca40"))


def test_catalog_roundtrip(catalog, tmp_path):
    path = tmp_path / "cat.json"
    path.write_text(catalog.dumps(), encoding="utf-8")
    again = load_catalog(path, strict=True)
    assert again == catalog
    assert again.dumps() == catalog.dumps()
    assert again.digest() == catalog.digest()


def test_env_override(catalog, tmp_path, monkeypatch):
    doc = catalog.to_dict()
    doc["molecules"] = doc["molecules"][:1]
    path = tmp_path / "small.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    monkeypatch.setenv("QLS_CATALOG", str(path))
    assert [m.name for m in load_catalog().molecules] == ["NH3+"]
    monkeypatch.delenv("QLS_CATALOG")
    assert len(load_catalog().molecules) == 5


def test_unknown_keys(catalog):
    doc = catalog.to_dict()
    doc["molecules"][0]["colour"] = "blue"
    with pytest.raises(CatalogError):
        catalog_from_dict(doc, strict=True)
    with pytest.warns(UserWarning, match="unknown keys"):
        catalog_from_dict(doc, strict=False)


def test_schema_violations(catalog):
    doc = catalog.to_dict()
    del doc["ions"][0]["mass_da"]
    with pytest.raises(CatalogError):
        catalog_from_dict(doc)
    doc = catalog.to_dict()
    doc["molecules"][0]["modes"][0]["freq_cm1"] = -5
    with pytest.raises(CatalogError):
        catalog_from_dict(doc)
    doc = catalog.to_dict()
    doc["molecules"][0]["default_ion"] = "Yb171"
    with pytest.raises(CatalogError):
        catalog_from_dict(doc)


@given(st.floats(100, 5000), st.floats(1.01, 3))
def test_eta_probe_linear_in_wavenumber(nu, f):
    crystal = builtin_catalog().crystal("C3HN+")
    assert eta_probe(crystal, nu * f) == pytest.approx(f * eta_probe(crystal, nu), rel=1e-12)
