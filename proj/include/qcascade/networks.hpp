#pragma once

#include "qcascade/delay_network.hpp"

#include <cstdint>

namespace qc {

struct ExampleParams {
    double eta = 0.6;     // beamsplitter transmissivity amplitude
    double kappa = 1.0;   // cavity decay rate
    double eps = 0.2;     // squeezing strength
    double delay = 2.0;   // loop delay
    double loop_phase = 0.0;
    // false: loop closed on the beamsplitter port that does not carry the
    // squeezer output (degenerate static ladder); true: loop through the squeezer.
    bool loop_through_squeezer = false;
};

// Degenerate parametric amplifier coupled to one beamsplitter port, the
// other port fed back through a delay line.
SLHModel example_slh(const ExampleParams& p = {});
DelayNetwork example_network(const ExampleParams& p = {});

// g(z) = -sinh(h z - b) / sinh(h z + b), h = delay / 2, b = -ln(sqrt(1 - eta^2)) / 2;
// for the default wiring T~ = g(z) * T_sq(z) with T_sq the bare squeezer.
cplx example_loop_scalar(const ExampleParams& p, cplx z);
Mat example_squeezer_tf(const ExampleParams& p, cplx z);

struct RandomNetworkOptions {
    int ports = 1;         // N = M
    int modes = 1;
    double base = 1.0;     // base delay
    int max_multiple = 2;  // delays k * base with k in [1, max_multiple]
    double squeeze = 0.1;  // scale of eps entries
};

// Random physically realizable network: S from a CS decomposition with
// cos(theta) in [0.3, 0.9] so that S2, S3 and S4 are invertible.
DelayNetwork random_network(std::uint64_t seed, const RandomNetworkOptions& opt = {});
// Random delay-free system with n modes and m ports.
RationalTF random_finite_system(std::uint64_t seed, int modes, int ports, double squeeze = 0.1);

}  // namespace qc
