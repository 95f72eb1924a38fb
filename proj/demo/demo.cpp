// Lyapunov exponent and criterion margin across the spectrum at weak
// disorder, next to the free value log|w_E|.

#include <cmath>
#include <cstdio>

#include "bethe/spectra.hpp"

int main() {
    using namespace bethe;
    const int K = 2;
    const double beta = 0.05, eta = 1e-4;
    std::printf("%6s %12s %12s %10s %10s  %s\n", "E", "log|w_E|", "lambda", "stderr", "margin",
                "phase");
    for (double E = 0.0; E <= 3.75; E += 0.25) {
        SolveOptions opt;
        opt.pool_size = 20000;
        opt.eta = eta;
        opt.seed = 7;
        opt.workers = default_workers();
        const SpectralReport r = solve_point(E, K, DisorderLaw::uniform(beta), opt);
        std::printf("%6.2f %12.6f %12.6f %10.2e %10.5f  %s\n", E, r.log_w, r.lyapunov.value,
                    r.lyapunov.error, r.margin.value, to_string(r.phase).c_str());
    }
}
