import json

import numpy as np
import pytest

from solitonsphere import cli
from solitonsphere import mesh as M
from solitonsphere.constructions import round_sphere


@pytest.fixture(scope="module")
def sphere_mesh():
    return M.mesh_surface(round_sphere(), 8)


def test_square_sampling_counts():
    grids = M.sample_cp1(8)
    assert [g.points.shape for g in grids] == [(9, 9), (9, 9)]
    assert [M.grid_cells(g) for g in grids] == [64, 64]
    assert grids[0].boundary.sum() == 32
    assert np.allclose(np.abs(grids[0].points[grids[0].boundary]), 1)
    with pytest.raises(M.SpecError):
        M.sample_cp1(4)


def test_round_sphere_mesh_is_closed_and_outward(sphere_mesh):
    m = sphere_mesh
    assert len(m.vertices) == 2 * 81 - 32
    assert len(m.triangles) == 2 * 2 * 64
    assert m.boundary_edges() == 0 and m.orientation_defects() == 0
    assert np.allclose(np.linalg.norm(m.vertices, axis=1), 1)
    assert np.allclose(m.mean_curvature, 1)
    assert np.all(np.sum(m.normals * m.vertices, axis=1) > 0.99)
    a, b, c = (m.vertices[m.triangles[:, k]] for k in range(3))
    vn = m.normals[m.triangles].sum(axis=1)
    assert np.all(np.sum(np.cross(b - a, c - a) * vn, axis=1) > 0)
    assert m.triangle_areas().min() > 0


def test_polar_mesh_is_closed():
    m = M.mesh_surface(round_sphere(), 8, polar=True)
    assert m.boundary_edges() == 0 and m.orientation_defects() == 0


def test_obj_round_trip(sphere_mesh, tmp_path):
    path = tmp_path / "s.obj"
    M.export(sphere_mesh, path)
    v, vn, f = M.read_obj(path)
    assert np.allclose(v, sphere_mesh.vertices, atol=1e-8)
    assert np.allclose(vn, sphere_mesh.normals, atol=1e-8)
    assert np.array_equal(f, sphere_mesh.triangles)


def test_ply_round_trip_is_bit_exact(sphere_mesh, tmp_path):
    path = tmp_path / "s.ply"
    M.export(sphere_mesh, path)
    vert, tri = M.read_ply(path)
    for k, name in enumerate("xyz"):
        assert np.array_equal(vert[name], sphere_mesh.vertices[:, k].astype(np.float32))
    assert np.array_equal(vert["quality"], sphere_mesh.mean_curvature.astype(np.float32))
    assert np.array_equal(tri, sphere_mesh.triangles)


def test_export_is_deterministic(sphere_mesh, tmp_path):
    a, b = tmp_path / "a.ply", tmp_path / "b.ply"
    M.export(sphere_mesh, a)
    M.export(M.mesh_surface(round_sphere(), 8), b)
    assert a.read_bytes() == b.read_bytes()
    with pytest.raises((M.SpecError, ValueError)):
        M.export(sphere_mesh, tmp_path / "x.stl")


def test_spec_json_round_trip(tmp_path):
    spec = M.SurfaceSpec("bryant_deformed", {"mu": 3, "s": [0, 2.3], "t": "-0.33i"}, {"res": 16})
    path = tmp_path / "spec.json"
    spec.dump(path)
    back = M.SurfaceSpec.load(path)
    assert back == spec
    with pytest.raises(M.SpecError):
        M.SurfaceSpec.from_json({"family": "round_sphere", "colour": "red"})
    with pytest.raises(M.SpecError):
        M.SurfaceSpec("catenoid_cousin", {"mu": 0}).validate()
    with pytest.raises(M.SpecError):
        M.SurfaceSpec("nope").validate()


def test_parsers():
    assert M.parse_complex("0.72i") == 0.72j
    assert M.parse_complex([1, -2]) == 1 - 2j
    assert M.parse_complex(3) == 3
    assert np.array_equal(M.parse_quat([0, 1, 0, 0]), [0, 1, 0, 0])
    with pytest.raises(M.SpecError):
        M.parse_complex("abc")


def test_build_round_sphere_report():
    r = M.build_mesh(M.SurfaceSpec("round_sphere", {}, {"res": 8}))
    assert r.ok and not r.report["failures"]
    assert r.report["quantization"]["d"] == 1
    assert r.report["W_over_4pi"] == pytest.approx(1, rel=1e-3)


def test_cli_gen_writes_mesh_and_report(tmp_path):
    out, rep, spec = tmp_path / "m.obj", tmp_path / "r.json", tmp_path / "s.json"
    code = cli.main(["gen", "catenoid_cousin", "--mu", "1", "--res", "16", "--out", str(out),
                     "--report", str(rep), "--spec-out", str(spec)])
    assert code == 0
    report = json.loads(rep.read_text())
    assert report["quantization"]["d"] == 4
    assert out.exists() and M.SurfaceSpec.load(spec).family == "catenoid_cousin"


def test_cli_energy_and_transform(tmp_path):
    spec = tmp_path / "s.json"
    M.SurfaceSpec("catenoid_cousin", {"mu": 1}, {"res": 16}).dump(spec)
    assert cli.main(["energy", "--spec", str(spec), "--report", str(tmp_path / "e.json")]) == 0
    rep = tmp_path / "d.json"
    assert cli.main(["transform", "darboux", "--spec", str(spec), "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["report"]["classification"]["flags"]["UMBILIC"]
    assert cli.main(["transform", "backlund1", "--spec", str(spec), "--report", str(tmp_path / "b.json")]) == 2


def test_cli_validation_exit_codes(tmp_path):
    assert cli.main(["gen", "catenoid_cousin", "--mu", "0", "--report", str(tmp_path / "r.json")]) == 2
    assert cli.main(["energy", "--spec", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["gen", "not_a_family"])


def test_cli_spectrum(tmp_path, capsys):
    assert cli.main(["spectrum", "--potential", "dirac:1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == [0, 1] and out["trace"] == pytest.approx(4)
    bad = tmp_path / "u.csv"
    x = np.linspace(-30, 30, 601)
    np.savetxt(bad, np.c_[x, 0.1 + 0 * x], delimiter=",")
    assert cli.main(["spectrum", "--potential", f"csv:{bad}", "--kappa-max", "1"]) == 3
    assert cli.main(["spectrum", "--potential", f"csv:{bad}"]) == 2
