#pragma once

#include <memory>
#include <vector>

#include "wtkin/grid.hpp"

namespace wtkin {

// Isotropic four-wave collision operator in the energy variable,
//   C[f](e1) = Gamma * int de3 de4 W(e1,e2,e3,e4)
//              * [ (f1+f2) f3 f4 - (f3+f4) f1 f2 ],   e2 = e3+e4-e1,
// over { e3, e4 >= 0 : e3+e4 >= e1 }, with
//   W = min{ 1, sqrt(e2/e1), sqrt(e3/e1), sqrt(e4/e1) }.

struct KernelParams {
    // collision constant; 1/(8 pi^6)
    double gamma = 1.3002018416198157e-04;
};

// returns the constant above, computed rather than typed
double default_gamma();

double kernel_w(double e1, double e2, double e3, double e4);

// Tensor-trapezoid quadrature over the grid with linear clip weights at the
// region boundary.  The integration band is clipped to e2 <= eps_max so that
// every evaluated quadruple lies inside the represented domain; without the
// clip a flat spectrum would see a spurious gain fed by the truncated tail
// and the exact equilibria would not be annihilated.
//
// boundary_refine subdivides cells cut by either clip line (that many
// sub-cells per direction); the sqrt(e2) behavior of W along the resonance
// line is otherwise the dominant quadrature error in the conserved moments.
class CollisionOperator {
  public:
    explicit CollisionOperator(std::shared_ptr<const EnergyGrid> grid,
                               KernelParams params = {},
                               int boundary_refine = 8);

    double rhs_at(const Spectrum& s, double eps1) const;
    std::vector<double> rhs(const Spectrum& s) const;

    const EnergyGrid& grid() const { return *grid_; }
    const KernelParams& params() const { return params_; }

  private:
    double node_rhs(const LogLogInterp& f, const std::vector<double>& fv,
                    double eps1, double f1) const;

    std::shared_ptr<const EnergyGrid> grid_;
    KernelParams params_;
    int boundary_refine_;
    bool subdivide_all_ = false;  // experiment hook (negative refine)
    std::vector<double> cell_left_, cell_right_;
};

// convenience wrappers matching the operation names
double collision_rhs_at(const Spectrum& s, double eps1, KernelParams params = {});
std::vector<double> collision_rhs(const Spectrum& s, KernelParams params = {});

// equilibrium family f = T/(eps+mu), annihilated by the collision bracket
Spectrum rayleigh_jeans(std::shared_ptr<const EnergyGrid> grid, double T,
                        double mu);

}  // namespace wtkin
