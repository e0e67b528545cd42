#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wavearm/types.hpp"

namespace wavearm {

/// One linear wave train. `height` enters the elevation sum with amplitude
/// height/2 (trough-to-crest convention).
struct WaveComponent {
  double height = 0.0;  ///< A (m); cosine amplitude is A/2
  double period = 0.0;  ///< T (s)
  double phase = 0.0;   ///< phi (rad)
  double omega = 0.0;   ///< 2*pi/T (rad/s)
  double wavenumber = 0.0; ///< k (1/m), satisfies the dispersion relation
  double wavelength() const { return 2.0 * kPi / wavenumber; }
};

/// An irregular sea: a frozen set of components over water of constant depth.
/// Immutable after synthesis; all field evaluations are pure.
struct SeaState {
  std::vector<WaveComponent> components;
  double depth = 20.0;    ///< d (m), bed at z = -depth
  double hs = 0.0;        ///< significant wave height the set was built for (m)
  double tp = 0.0;        ///< peak period (s)
  double gravity = 9.81;
  std::uint64_t seed = 0; ///< phase-draw seed
};

/// Solves g*k*tanh(k*d) = omega^2 for k by Newton iteration from the
/// deep-water guess omega^2/g. Residual below 1e-10; throws after 100
/// iterations (pathological input).
double dispersion_solve(double omega, double depth, double gravity = 9.81);

/// Builds an irregular sea from JONSWAP parameters: N components on a uniform
/// frequency grid spanning [0.5, 3]*omega_p, heights from the spectral density
/// (amplitude A/2 = sqrt(2*S*dw)), phases uniform on [0, 2pi) from `seed`.
/// The spectral scale is normalized so the component set reproduces Hs
/// exactly through 4*sqrt(m0).
SeaState synthesize_jonswap(double hs, double tp, double gamma, int n_components,
                            double depth, std::uint64_t seed, double gravity = 9.81);

/// JONSWAP spectral density shape (unit Phillips constant): used by the
/// synthesizer and exposed for spectrum plots.
double jonswap_shape(double omega, double omega_p, double gamma);

/// Free-surface elevation zeta(x, t) (m).
double elevation(const SeaState& sea, double x, double t);

/// Horizontal and vertical water-particle velocity at (x, z, t), z in
/// [-depth, 0]. Throws std::out_of_range outside the water column. The
/// depth-attenuation ratios are evaluated in exponential form, so w_p is
/// exactly zero at the bed and nothing overflows for short deep-water waves.
Vec2 particle_velocity(const SeaState& sea, double x, double z, double t);

/// Analytic time derivative of particle_velocity.
Vec2 particle_acceleration(const SeaState& sea, double x, double z, double t);

/// Reads a two-column spectrum file (header line `omega,S`, then rows
/// "omega,S" in rad/s and m^2*s) for replaying measured spectra.
std::vector<std::pair<double, double>> load_spectrum(const std::string& path);

/// Builds a sea from tabulated spectral density using the same amplitude rule
/// as the JONSWAP path (A/2 = sqrt(2*S*dw), dw from the local grid spacing).
SeaState synthesize_from_table(const std::vector<std::pair<double, double>>& table,
                               double depth, std::uint64_t seed, double gravity = 9.81);

} // namespace wavearm
