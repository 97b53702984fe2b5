import numpy as np
import pytest

from fgmopt.materials import AL_ZRO2, MaterialPair, MaterialProps, VolumeFractionField
from fgmopt.mesh import EDGE_N_TABLE, GAUSS_1D_WTS, GAUSS_WTS, Mesh, N_TABLE, generate_rectangle
from fgmopt.thermal import (
    SolverError,
    TemperatureField,
    ThermalBCs,
    _assemble_thermal_system,
    _edge_geometry,
    assemble_and_solve_thermal,
    assemble_conductivity,
    conductivity_at_gauss,
    temperature_at_gauss_points,
)

K_METAL = AL_ZRO2.metal.k


def metal_field(mesh):
    return VolumeFractionField(np.zeros(mesh.n_corner_nodes))


def with_full_boundary_set(mesh, name="boundary_all"):
    """Rebuild the mesh with one merged Dirichlet set covering the whole boundary."""
    from fgmopt.mesh import BoundarySet

    sets = dict(mesh.boundary_sets)
    sets[name] = BoundarySet(name, mesh.boundary_nodes())
    return Mesh(mesh.coords, mesh.elements, sets)


def l2_error(mesh, theta, exact_fn):
    det_j, _, gauss_xy = mesh.geometry()
    th_g = temperature_at_gauss_points(mesh, TemperatureField(theta))
    diff = th_g - exact_fn(gauss_xy[..., 0], gauss_xy[..., 1])
    return float(np.sqrt(np.einsum("g,eg,eg->", GAUSS_WTS, det_j, diff ** 2)))


# ----------------------------------------------------------------------

def test_linear_profile_exact():
    mesh = generate_rectangle(1.0, 1.0, 5, 3)
    bcs = ThermalBCs(dirichlet=[("left", 100.0), ("right", 0.0)])
    temp = assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, bcs)
    exact = 100.0 * (1.0 - mesh.coords[:, 0])
    assert np.abs(temp.theta - exact).max() < 1e-9


def test_resistance_network_oracle():
    # left theta0, right convection (h, t_inf): theta_s = (k/L*theta0 + h*t_inf)/(k/L + h)
    length, h, theta0, t_inf = 1.0, 50.0, 100.0, 10.0
    mesh = generate_rectangle(length, 0.5, 6, 2)
    bcs = ThermalBCs(dirichlet=[("left", theta0)], convection=[("right", h, t_inf)])
    temp = assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, bcs)
    k_over_l = K_METAL / length
    theta_s = (k_over_l * theta0 + h * t_inf) / (k_over_l + h)
    right = mesh.boundary_sets["right"].node_ids
    assert np.abs(temp.theta[right] - theta_s).max() / theta_s < 1e-8


def test_manufactured_quadratic_solution():
    # theta = x^2 + y^2 with Q = -k * laplacian(theta) = -4k (computed, not assumed)
    mesh = with_full_boundary_set(generate_rectangle(1.0, 1.0, 4, 4))
    exact = lambda x, y: x ** 2 + y ** 2
    bcs = ThermalBCs(
        dirichlet=[("boundary_all", exact)],
        heat_source=lambda x, y: -4.0 * K_METAL * np.ones_like(x),
    )
    temp = assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, bcs)
    assert l2_error(mesh, temp.theta, exact) < 1e-9


def test_dirichlet_function_of_position():
    mesh = generate_rectangle(1.0, 1.0, 8, 8)
    bcs = ThermalBCs(
        dirichlet=[("top", lambda x, y: 500.0 * np.sin(np.pi * x / 2))],
        convection=[("left", 50.0, 0.0), ("bottom", 50.0, 0.0)],
    )
    temp = assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, bcs)
    top = mesh.boundary_sets["top"].node_ids
    expect = 500.0 * np.sin(np.pi * mesh.coords[top, 0] / 2)
    assert np.abs(temp.theta[top] - expect).max() < 1e-12


def test_floating_problem_rejected():
    mesh = generate_rectangle(1.0, 1.0, 2, 2)
    with pytest.raises(SolverError, match="floating"):
        assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, ThermalBCs(flux=[("left", 5.0)]))


def test_overlapping_dirichlet_sets_rejected():
    mesh = generate_rectangle(1.0, 1.0, 2, 2)
    bcs = ThermalBCs(dirichlet=[("left", 1.0), ("bottom", 0.0)])  # share a corner
    with pytest.raises(ValueError, match="Dirichlet"):
        assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, bcs)


def test_negative_convection_coefficient_rejected():
    mesh = generate_rectangle(1.0, 1.0, 2, 2)
    bcs = ThermalBCs(dirichlet=[("left", 1.0)], convection=[("right", -5.0, 0.0)])
    with pytest.raises(ValueError, match=">= 0"):
        assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, bcs)


def test_stiffness_symmetry():
    mesh = generate_rectangle(1.0, 1.0, 4, 3)
    rng = np.random.default_rng(0)
    field = VolumeFractionField(rng.uniform(0, 1, mesh.n_corner_nodes))
    k = assemble_conductivity(mesh, conductivity_at_gauss(mesh, field, AL_ZRO2)).toarray()
    assert np.abs(k - k.T).max() <= 1e-12 * np.abs(k).max()


def test_maximum_principle_no_source():
    mesh = generate_rectangle(1.0, 1.0, 6, 6)
    rng = np.random.default_rng(1)
    field = VolumeFractionField(rng.uniform(0, 1, mesh.n_corner_nodes))
    bcs = ThermalBCs(dirichlet=[("top", 100.0)], convection=[("left", 50.0, 0.0), ("bottom", 50.0, 0.0)])
    temp = assemble_and_solve_thermal(mesh, field, AL_ZRO2, bcs)
    boundary = mesh.boundary_nodes()
    lo, hi = temp.theta[boundary].min(), temp.theta[boundary].max()
    assert temp.theta.min() >= lo - 1e-8
    assert temp.theta.max() <= hi + 1e-8


def test_global_energy_balance():
    # discrete reactions at Dirichlet nodes equal the convective outflow
    mesh = generate_rectangle(1.0, 1.0, 5, 5)
    rng = np.random.default_rng(2)
    field = VolumeFractionField(rng.uniform(0, 1, mesh.n_corner_nodes))
    h, t_inf = 50.0, 0.0
    bcs = ThermalBCs(dirichlet=[("left", 200.0)], convection=[("right", h, t_inf), ("top", h, t_inf)])
    temp = assemble_and_solve_thermal(mesh, field, AL_ZRO2, bcs)

    k_mat, f, fixed_idx, _ = _assemble_thermal_system(mesh, field, AL_ZRO2, bcs)
    reactions = k_mat @ temp.theta - f
    heat_in = reactions[fixed_idx].sum()

    heat_out = 0.0  # independent edge quadrature of h*(theta - t_inf)
    for name in ("right", "top"):
        for e, le in mesh.boundary_sets[name].edge_list:
            ids, _, scale = _edge_geometry(mesh, e, le)
            th = EDGE_N_TABLE @ temp.theta[ids]
            heat_out += float(np.sum(GAUSS_1D_WTS * scale * h * (th - t_inf)))
    assert abs(heat_in - heat_out) <= 1e-6 * abs(heat_out)


def test_prescribed_flux_balance():
    # pure flux in, convection out: net must balance (robustness of edge terms)
    mesh = generate_rectangle(1.0, 1.0, 4, 4)
    q_in, h = 1000.0, 50.0
    bcs = ThermalBCs(flux=[("left", q_in)], convection=[("right", h, 0.0)])
    temp = assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, bcs)
    out = 0.0
    for e, le in mesh.boundary_sets["right"].edge_list:
        ids, _, scale = _edge_geometry(mesh, e, le)
        th = EDGE_N_TABLE @ temp.theta[ids]
        out += float(np.sum(GAUSS_1D_WTS * scale * h * th))
    assert out == pytest.approx(q_in * 1.0, rel=1e-8)


def test_mesh_convergence_order_cubic():
    exact = lambda x, y: x ** 3 + y ** 3
    source = lambda x, y: -K_METAL * (6 * x + 6 * y)
    errors = []
    for n in (2, 4, 8):
        mesh = with_full_boundary_set(generate_rectangle(1.0, 1.0, n, n))
        bcs = ThermalBCs(dirichlet=[("boundary_all", exact)], heat_source=source)
        temp = assemble_and_solve_thermal(mesh, metal_field(mesh), AL_ZRO2, bcs)
        errors.append(l2_error(mesh, temp.theta, exact))
    order1 = np.log2(errors[0] / errors[1])
    order2 = np.log2(errors[1] / errors[2])
    assert order1 >= 2.9
    assert order2 >= 2.9


# ----------------------------------------------------------------------
# Gauss-point extraction
# ----------------------------------------------------------------------

def test_gauss_temperatures_constant_field():
    mesh = generate_rectangle(1.0, 1.0, 2, 2)
    th = temperature_at_gauss_points(mesh, TemperatureField(np.full(mesh.n_nodes, 7.5)))
    assert np.allclose(th, 7.5)


def test_gauss_temperatures_linear_field():
    mesh = generate_rectangle(1.0, 1.0, 2, 2)
    field = TemperatureField(mesh.coords[:, 0].copy())
    th = temperature_at_gauss_points(mesh, field)
    _, _, gauss_xy = mesh.geometry()
    assert np.allclose(th, gauss_xy[..., 0], atol=1e-13)


def test_gauss_temperatures_quadratic_exact():
    mesh = generate_rectangle(1.0, 1.0, 3, 3)
    f = lambda x, y: 2 * x ** 2 - x * y + 0.5 * y ** 2 + 3 * x - y + 1
    field = TemperatureField(f(mesh.coords[:, 0], mesh.coords[:, 1]))
    th = temperature_at_gauss_points(mesh, field)
    _, _, gauss_xy = mesh.geometry()
    assert np.abs(th - f(gauss_xy[..., 0], gauss_xy[..., 1])).max() < 1e-10
