#pragma once

#include "smlab/calculus.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace smlab {

using ComplexSymbol = std::function<std::complex<double>(double)>;

// A symbol with what the experiments need to know about it: the values, the
// logarithmic derivative λ·m'(λ) (for the dilation-derivative term), m(0), and
// whether it is real-valued (only those can go through apply_multiplier).
struct NamedSymbol {
    std::string name;
    ComplexSymbol m;
    ComplexSymbol lambda_dm;
    double m0 = 0.0;
    bool is_real = true;

    Symbol real() const;
    Symbol real_lambda_dm() const;
};

// one, zero, heat (e^{−λ}), lambda_heat (λe^{−λ}), resolvent (1/(1+λ)),
// bump[:center[:sigma]] (log-Gaussian), imag_power[:beta] (λ^{iβ}).
NamedSymbol lookup_symbol(const std::string& spec);
std::vector<std::string> builtin_symbols();

NamedSymbol log_gaussian_bump(double center, double sigma);

// Two columns lambda,m with a header row; linear interpolation, flat extension.
NamedSymbol symbol_from_csv(const std::string& path);

NamedSymbol scale_symbol(const NamedSymbol& s, double c);
NamedSymbol add_symbols(const NamedSymbol& a, const NamedSymbol& b);

}  // namespace smlab
