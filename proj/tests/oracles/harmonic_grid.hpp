#pragma once

#include <cstddef>

#include "pulse.hpp"

namespace oracle {

struct GridResult {
    double fidelity = 0.0; // |<g|psi_T>|^2 with g the ground state displaced by dx
    double mean_x = 0.0;
    double mean_p = 0.0;
    double boundary_density = 0.0; // max |psi|^2 over the outer 5% of the box
};

struct GridOptions {
    std::size_t points = 512;
    double half_width = 0.0; // 0 selects |dx| + 10
    std::size_t substeps = 8;
};

/// Spatial-grid Schrodinger propagation of the trap ground state under H = (p^2 + (x - u)^2) / 2,
/// with u held at the step midpoint, by a fourth-order split-step Fourier scheme.
GridResult harmonic_grid_propagate(const qrobust::ControlPulse &pulse, double displacement,
                                   const GridOptions &options = {});

} // namespace oracle
