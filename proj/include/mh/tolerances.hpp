#pragma once

namespace mh::tol {

// Linear algebra kernel.
inline constexpr double sym_construction = 1e-12;   // symmetry defect accepted on input
inline constexpr double eig_orthonormal = 1e-12;    // eigenvector orthonormality
inline constexpr double eig_reconstruction = 1e-10; // ||S - V L V^T|| relative
inline constexpr double cross_oracle = 1e-9;        // vs independent root oracle
inline constexpr double affine_identity = 1e-12;    // trace_m(S + tI) shift identity
inline constexpr double dominance_slack = 1e-10;    // eigenvalue-order comparisons

// Predicate machinery. Relative factors; the absolute tolerance is formed
// against the fixture's field scale or inverse length scale at the call site.
inline constexpr double max_rel = 1e-6;    // restricted-max plateau, times field scale
inline constexpr double margin_rel = 1e-3; // violation margin, times 1/length scale
inline constexpr double grad_floor = 1e-6; // |Df| below this counts as vanishing

// Fields and geometry.
inline constexpr int sdf_exact_band_cells = 3;   // direct-distance band half-width
inline constexpr int touching_band_cells = 1;    // contact detection band
inline constexpr double eikonal_median_residual = 0.02;
inline constexpr double cut_locus_shrink_rel = 1e-3; // curvature shrink near cut locus

// Riccati propagation.
inline constexpr double riccati_rel = 1e-8;   // integrator vs closed form
inline constexpr double blowup_kappa = 1e6;   // |kappa| beyond this is blow-up
inline constexpr double riccati_max_step = 1e-3;

// Varifold quadrature.
inline constexpr int subdivision_levels = 4;
inline constexpr double quadrature_rel = 1e-3; // additivity slack, relative
inline constexpr double gap_alpha_eps = 1e-9;
inline constexpr double face_degenerate_rel = 1e-12; // min area, times scale^m

// Level-set flow.
inline constexpr double cfl_factor = 0.4;
inline constexpr int reinit_every = 20;
inline constexpr double flow_grad_floor = 1e-6;
inline constexpr int limit_window_steps = 50;
inline constexpr double limit_displacement_cells = 0.05;
inline constexpr double reinit_interface_shift_cells = 0.1;

}  // namespace mh::tol
