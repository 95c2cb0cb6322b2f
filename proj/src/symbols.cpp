#include "smlab/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace smlab {

using cplx = std::complex<double>;

Symbol NamedSymbol::real() const
{
    if (!is_real)
        throw std::invalid_argument("symbol '" + name + "' is complex-valued");
    auto f = m;
    return [f](double l) { return f(l).real(); };
}

Symbol NamedSymbol::real_lambda_dm() const
{
    if (!is_real)
        throw std::invalid_argument("symbol '" + name + "' is complex-valued");
    auto f = lambda_dm;
    return [f](double l) { return f(l).real(); };
}

NamedSymbol log_gaussian_bump(double center, double sigma)
{
    if (!(center > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("bump needs positive center and width");
    NamedSymbol s;
    s.name = "bump:" + format_number(center) + ":" + format_number(sigma);
    s.m = [=](double l) -> cplx {
        if (l <= 0.0)
            return 0.0;
        const double u = std::log(l / center) / sigma;
        return std::exp(-0.5 * u * u);
    };
    s.lambda_dm = [=](double l) -> cplx {
        if (l <= 0.0)
            return 0.0;
        const double u = std::log(l / center) / sigma;
        return -u / sigma * std::exp(-0.5 * u * u);
    };
    s.m0 = 0.0;
    return s;
}

namespace {

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep))
        parts.push_back(item);
    return parts;
}

double parse_double(const std::string& s, const std::string& what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot read " + what + " from '" + s + "'");
    }
}

}  // namespace

std::vector<std::string> builtin_symbols()
{
    return {"one", "zero", "heat", "lambda_heat", "resolvent", "bump", "imag_power"};
}

NamedSymbol lookup_symbol(const std::string& spec)
{
    const auto parts = split(spec, ':');
    if (parts.empty())
        throw std::invalid_argument("empty symbol name");
    const std::string& head = parts[0];
    auto arg = [&](std::size_t i, double fallback) {
        return parts.size() > i ? parse_double(parts[i], head + " parameter") : fallback;
    };

    NamedSymbol s;
    s.name = spec;
    if (head == "one") {
        s.m = [](double) -> cplx { return 1.0; };
        s.lambda_dm = [](double) -> cplx { return 0.0; };
        s.m0 = 1.0;
    } else if (head == "zero") {
        s.m = [](double) -> cplx { return 0.0; };
        s.lambda_dm = s.m;
    } else if (head == "heat") {
        s.m = [](double l) -> cplx { return std::exp(-l); };
        s.lambda_dm = [](double l) -> cplx { return -l * std::exp(-l); };
        s.m0 = 1.0;
    } else if (head == "lambda_heat") {
        s.m = [](double l) -> cplx { return l * std::exp(-l); };
        s.lambda_dm = [](double l) -> cplx { return l * (1.0 - l) * std::exp(-l); };
    } else if (head == "resolvent") {
        s.m = [](double l) -> cplx { return 1.0 / (1.0 + l); };
        s.lambda_dm = [](double l) -> cplx { return -l / ((1.0 + l) * (1.0 + l)); };
        s.m0 = 1.0;
    } else if (head == "bump") {
        s = log_gaussian_bump(arg(1, 1.0), arg(2, 0.5));
        s.name = spec;
    } else if (head == "imag_power") {
        const double beta = arg(1, 1.0);
        s.m = [beta](double l) -> cplx { return l > 0.0 ? std::exp(cplx(0.0, beta * std::log(l))) : 0.0; };
        s.lambda_dm = [beta](double l) -> cplx {
            return l > 0.0 ? cplx(0.0, beta) * std::exp(cplx(0.0, beta * std::log(l))) : 0.0;
        };
        // λ^{iβ} has no limit at 0; |m| = 1 is what enters the bound.
        s.m0 = 1.0;
        s.is_real = false;
    } else {
        throw std::invalid_argument("unknown symbol '" + head + "'");
    }
    return s;
}

NamedSymbol symbol_from_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open symbol table " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> xs, ys;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto cols = split(line, ',');
        if (cols.size() < 2)
            throw std::runtime_error("symbol table row needs two columns: " + line);
        xs.push_back(parse_double(cols[0], "lambda"));
        ys.push_back(parse_double(cols[1], "m"));
    }
    if (xs.size() < 2)
        throw std::runtime_error("symbol table needs at least two rows");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw std::runtime_error("symbol table lambdas must increase");

    auto interp = [xs, ys](double l) -> cplx {
        if (l <= xs.front())
            return ys.front();
        if (l >= xs.back())
            return ys.back();
        const auto it = std::upper_bound(xs.begin(), xs.end(), l);
        const auto i = static_cast<std::size_t>(it - xs.begin());
        const double u = (l - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ys[i - 1] + u * (ys[i] - ys[i - 1]);
    };
    auto ldm = [xs, ys](double l) -> cplx {
        if (l <= xs.front() || l >= xs.back())
            return 0.0;
        const auto it = std::upper_bound(xs.begin(), xs.end(), l);
        const auto i = static_cast<std::size_t>(it - xs.begin());
        return l * (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
    };
    NamedSymbol s;
    s.name = "csv:" + path;
    s.m = interp;
    s.lambda_dm = ldm;
    s.m0 = xs.front() == 0.0 ? ys.front() : interp(0.0).real();
    return s;
}

NamedSymbol scale_symbol(const NamedSymbol& s, double c)
{
    NamedSymbol out = s;
    out.name = format_number(c) + "*" + s.name;
    auto m = s.m, d = s.lambda_dm;
    out.m = [m, c](double l) { return c * m(l); };
    out.lambda_dm = [d, c](double l) { return c * d(l); };
    out.m0 = c * s.m0;
    return out;
}

NamedSymbol add_symbols(const NamedSymbol& a, const NamedSymbol& b)
{
    NamedSymbol out;
    out.name = a.name + "+" + b.name;
    auto ma = a.m, mb = b.m, da = a.lambda_dm, db = b.lambda_dm;
    out.m = [ma, mb](double l) { return ma(l) + mb(l); };
    out.lambda_dm = [da, db](double l) { return da(l) + db(l); };
    out.m0 = a.m0 + b.m0;
    out.is_real = a.is_real && b.is_real;
    return out;
}

}  // namespace smlab
