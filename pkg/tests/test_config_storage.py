import numpy as np
import pytest

from nematoflow.config import ConfigError, parse_config
from nematoflow.grid import Grid
from nematoflow.solver import ScenarioConfig, initialize
from nematoflow.storage import (StorageError, read_diagnostics_csv,
                                read_snapshot, write_diagnostics_csv,
                                write_snapshot)
from nematoflow.diagnostics import DiagnosticsRecord
from nematoflow.sampling import make_rng, halton

BASE = """
[material]
free_energy = ideal_linear
a = 2.0
k = 0.5

[grid]
Nx = 8
Ny = 8
Lx = 3.141592653589793
Ly = 3.141592653589793

[time]
dt = 0.005
t_end = 0.05
output_every = 0.025

[scenario]
name = equilibrium_perturbation
amplitude = 0.02

[output]
directory = {outdir}
"""


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_halton_is_deterministic_and_low_discrepancy():
    a = halton(100, 3)
    b = halton(100, 3)
    assert np.array_equal(a, b)
    assert np.all((a >= 0.0) & (a < 1.0))
    shifted = halton(100, 3, offset=50)
    assert np.array_equal(a[50:], shifted[:50])


def test_parse_and_build(tmp_path):
    cfg = parse_config(write_config(tmp_path, BASE.format(outdir=tmp_path / "out")))
    mat = cfg.build_material()
    assert mat.free_energy.name == "ideal_linear"
    assert mat.params.mu_s(1.0, 0.0) == 1.0           # defaulted rule
    grid = cfg.build_grid()
    assert isinstance(grid, Grid) and grid.Nx == 8
    sc = cfg.build_scenario()
    assert sc.theta_star == 1.5                        # schema default
    step = cfg.build_step_config()
    assert step.dt == 0.005 and not step.isothermal


def test_rule_forms(tmp_path):
    text = BASE.format(outdir=tmp_path) + \
        "mu_s = affine(c0=1.0, c_theta=0.05)\n" \
        "gamma = arrhenius(prefactor=0.8, activation=0.1)\n"
    # appended keys land in [output]; write them under material instead
    text = BASE.format(outdir=tmp_path).replace(
        "k = 0.5",
        "k = 0.5\nmu_s = affine(c0=1.0, c_theta=0.05)\n"
        "gamma = arrhenius(prefactor=0.8, activation=0.1)")
    cfg = parse_config(write_config(tmp_path, text))
    params = cfg.build_parameter_set()
    assert params.mu_s(2.0, 0.0) == pytest.approx(1.1)
    assert params.gamma(1.0, 0.0) == pytest.approx(0.8 * np.exp(0.1))


@pytest.mark.parametrize("mutation,needle", [
    (("Nx = 8", "Nx = 8\nbogus = 3"), "[grid].bogus"),
    (("[grid]", "[gird]"), "gird"),
    (("Nx = 8", "Nx = eight"), "[grid].Nx"),
    (("amplitude = 0.02", "amplitude = big"), "[scenario].amplitude"),
    (("k = 0.5", "k = 0.5\nmu_s = spline(1,2)"), "[material].mu_s"),
    (("k = 0.5", "k = 0.5\nk0 = 0.3"), "[material].k0"),
])
def test_validation_names_the_offending_key(tmp_path, mutation, needle):
    text = BASE.format(outdir=tmp_path).replace(*mutation)
    with pytest.raises(ConfigError) as err:
        cfg = parse_config(write_config(tmp_path, text))
        cfg.build_material()
        cfg.build_grid()
        cfg.build_scenario()
    assert needle in str(err.value)


def test_missing_required_key(tmp_path):
    text = BASE.format(outdir=tmp_path).replace("Nx = 8\n", "")
    cfg = parse_config(write_config(tmp_path, text))
    with pytest.raises(ConfigError) as err:
        cfg.build_grid()
    assert "[grid].Nx" in str(err.value)


def test_missing_file():
    with pytest.raises(ConfigError):
        parse_config("/nonexistent/run.ini")


def test_mode_validation(tmp_path):
    text = BASE.format(outdir=tmp_path) + "\n[run]\nmode = lukewarm\n"
    cfg = parse_config(write_config(tmp_path, text))
    with pytest.raises(ConfigError) as err:
        cfg.build_step_config()
    assert "[run].mode" in str(err.value)
    text = BASE.format(outdir=tmp_path) + "\n[run]\nmode = isothermal\n"
    cfg = parse_config(write_config(tmp_path, text))
    assert cfg.build_step_config().isothermal


def test_check_section_rho_range(tmp_path):
    text = BASE.format(outdir=tmp_path) + "\n[check]\nrho_min = 0.5\n"
    cfg = parse_config(write_config(tmp_path, text))
    with pytest.raises(ConfigError):
        cfg.sampling_spec()
    text = BASE.format(outdir=tmp_path) + "\n[check]\nrho_min = 0.5\nrho_max = 2.0\n"
    cfg = parse_config(write_config(tmp_path, text))
    assert cfg.sampling_spec().rho_range == (0.5, 2.0)


def test_shipped_default_config_parses():
    cfg = parse_config("configs/default.ini")
    cfg.build_material()
    cfg.build_grid()
    cfg.build_scenario()
    step = cfg.build_step_config()
    assert step.t_end == 40.0


def test_snapshot_roundtrip_is_bit_exact(tmp_path):
    g = Grid(Lx=np.pi, Ly=2.0, Nx=12, Ny=6)
    st = initialize(g, __import__("nematoflow").MaterialModel.default(),
                    ScenarioConfig(name="random_smooth", amplitude=0.3, seed=8))
    st.t = 0.725
    path = tmp_path / "snap.dat"
    write_snapshot(path, st)
    st2 = read_snapshot(path)
    assert st2.t == st.t
    assert st2.grid == st.grid
    for field in ("u", "v", "theta", "d", "pi"):
        assert np.array_equal(getattr(st2, field), getattr(st, field))


def test_snapshot_rejects_garbage(tmp_path):
    path = tmp_path / "bad.dat"
    path.write_text("not a snapshot\n")
    with pytest.raises(StorageError):
        read_snapshot(path)


def test_diagnostics_csv_roundtrip(tmp_path):
    rng = make_rng(3)
    records = []
    for k in range(5):
        vals = rng.standard_normal(12)
        records.append(DiagnosticsRecord(float(k), *map(float, vals)))
    path = tmp_path / "diag.csv"
    write_diagnostics_csv(path, records)
    back = read_diagnostics_csv(path)
    for a, b in zip(records, back):
        assert a.csv_values() == b.csv_values()
    with pytest.raises(StorageError):
        read_diagnostics_csv(tmp_path / "missing.csv")
