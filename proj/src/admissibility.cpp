#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/rational.hpp>

#include "wavelab/analysis.hpp"
#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

using Rational = boost::rational<long long>;

std::pair<long long, long long> reduce(long long num, long long den)
{
    if (den == 0) throw ParameterError("zero denominator in exponent");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const long long g = std::gcd(num, den);
    return g ? std::make_pair(num / g, den / g) : std::make_pair(0LL, 1LL);
}

bool parse_integer(const std::string& s, long long& out)
{
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stoll(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

// Comparisons for exact rationals and for doubles with a 1e-12 tolerance.
template <class T>
struct Compare {
    static bool eq(const T& a, const T& b) { return a == b; }
    static bool le(const T& a, const T& b) { return a <= b; }
    static bool lt(const T& a, const T& b) { return a < b; }
    static double to_double(const T& a) { return boost::rational_cast<double>(a); }
};

template <>
struct Compare<double> {
    static double tol(double a, double b) { return 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }
    static bool eq(double a, double b) { return std::abs(a - b) <= tol(a, b); }
    static bool le(double a, double b) { return a <= b + tol(a, b); }
    static bool lt(double a, double b) { return a < b - tol(a, b); }
    static double to_double(double a) { return a; }
};

struct Constraint {
    std::string name;
    bool ok;
    double slack; // +inf for equalities and exclusions
};

template <class T>
class Checker {
public:
    void equal(const std::string& name, const T& a, const T& b)
    {
        list_.push_back({name, Compare<T>::eq(a, b), std::numeric_limits<double>::infinity()});
    }
    void less_equal(const std::string& name, const T& a, const T& b)
    {
        list_.push_back({name, Compare<T>::le(a, b), Compare<T>::to_double(b) - Compare<T>::to_double(a)});
    }
    void less(const std::string& name, const T& a, const T& b)
    {
        list_.push_back({name, Compare<T>::lt(a, b), Compare<T>::to_double(b) - Compare<T>::to_double(a)});
    }
    void require(const std::string& name, bool ok)
    {
        list_.push_back({name, ok, std::numeric_limits<double>::infinity()});
    }

    AdmissibilityVerdict verdict(AdmissibilityRule rule, bool exact) const
    {
        AdmissibilityVerdict v;
        v.rule = rule;
        v.exact = exact;
        for (const auto& c : list_) {
            if (!c.ok) {
                v.passed = false;
                v.binding_constraint = c.name;
                return v;
            }
        }
        v.passed = true;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : list_) {
            if (c.slack < best) {
                best = c.slack;
                v.binding_constraint = c.name;
            }
        }
        if (v.binding_constraint.empty() && !list_.empty()) v.binding_constraint = list_.front().name;
        return v;
    }

private:
    std::vector<Constraint> list_;
};

// P = 1/p, Q = 1/q, G = gamma.
template <class T>
AdmissibilityVerdict evaluate(const T& P, const T& Q, const T& G, int n, AdmissibilityRule rule, bool exact)
{
    const T zero(0), half = T(1) / T(2), one(1), nn(n);
    Checker<T> c;
    c.less_equal("p >= 2", P, half);
    c.less_equal("q >= 2", Q, half);
    switch (rule) {
    case AdmissibilityRule::free_1_3:
        c.less("gamma > 0", zero, G);
        c.equal("1/p + n/q = n/2 - gamma", P + nn * Q, nn / T(2) - G);
        c.less_equal("1/p <= ((n-1)/2)(1/2 - 1/q)", P, (nn - one) / T(2) * (half - Q));
        c.require("(p,q,gamma) != (2,inf,1) when n = 3",
                  !(n == 3 && Compare<T>::eq(P, half) && Compare<T>::eq(Q, zero) && Compare<T>::eq(G, one)));
        break;
    case AdmissibilityRule::perturbed_1_4:
        c.equal("gamma = 1", G, one);
        if (n == 3) {
            c.less("q > 6", Q, T(1) / T(6));
        } else {
            c.less("q > 2n/(n-2)", Q, (nn - T(2)) / (T(2) * nn));
            c.less("q < 2n/(n-3)", (nn - T(3)) / (T(2) * nn), Q);
        }
        c.equal("1/p = n(q-2)/(2q) - 1", P, nn * (half - Q) - one);
        c.require("(p,q) != (2,inf) when n = 3", !(n == 3 && Compare<T>::eq(P, half) && Compare<T>::eq(Q, zero)));
        break;
    case AdmissibilityRule::local_5_1:
        c.less("p < inf", zero, P);
        c.less("q < inf", zero, Q);
        c.less("gamma > 0", zero, G);
        c.equal("1/p = n(q-2)/(2q) - gamma", P, nn * (half - Q) - G);
        c.less_equal("1/p <= (n-1)(q-2)/(4q)", P, (nn - one) / T(2) * (half - Q));
        break;
    }
    return c.verdict(rule, exact);
}

AdmissibilityVerdict fail(AdmissibilityRule rule, const std::string& why)
{
    AdmissibilityVerdict v;
    v.rule = rule;
    v.passed = false;
    v.binding_constraint = why;
    return v;
}

} // namespace

Exponent Exponent::rational(long long num, long long den)
{
    Exponent e;
    std::tie(e.num_, e.den_) = reduce(num, den);
    e.approx_ = static_cast<double>(e.num_) / static_cast<double>(e.den_);
    return e;
}

Exponent Exponent::infinity()
{
    Exponent e;
    e.infinite_ = true;
    e.approx_ = std::numeric_limits<double>::infinity();
    return e;
}

Exponent Exponent::from_double(double v)
{
    if (std::isinf(v) && v > 0) return infinity();
    if (!std::isfinite(v)) throw ParameterError("exponent must be a number");
    const double tol = 1e-12 * std::max(1.0, std::abs(v));
    if (std::abs(v) < 1e15) {
        for (long long d = 1; d <= 1000; ++d) {
            const double k = std::round(v * static_cast<double>(d));
            if (std::abs(v - k / static_cast<double>(d)) <= tol) return rational(static_cast<long long>(k), d);
        }
    }
    Exponent e;
    e.exact_ = false;
    e.approx_ = v;
    return e;
}

Exponent Exponent::parse(const std::string& text)
{
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (s == "inf" || s == "infinity" || s == "+inf" || s == "∞") return infinity();
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        long long a = 0, b = 0;
        if (!parse_integer(s.substr(0, slash), a) || !parse_integer(s.substr(slash + 1), b))
            throw ParameterError("cannot parse exponent '" + text + "'");
        return rational(a, b);
    }
    long long a = 0;
    if (parse_integer(s, a)) return rational(a, 1);
    if (const auto dot = s.find('.'); dot != std::string::npos && s.find_first_of("eE") == std::string::npos) {
        const std::string frac = s.substr(dot + 1);
        const std::string whole = s.substr(0, dot);
        long long w = 0, f = 0;
        const bool whole_ok = whole.empty() || whole == "-" || whole == "+" || parse_integer(whole, w);
        const bool frac_ok = !frac.empty() && frac.size() <= 15 &&
                             std::all_of(frac.begin(), frac.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
        if (whole_ok && frac_ok) {
            f = std::stoll(frac);
            long long den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
            const bool negative = !whole.empty() && whole[0] == '-';
            const long long mag = std::abs(w) * den + f;
            return rational(negative ? -mag : mag, den);
        }
    }
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size()) return from_double(v);
    } catch (...) {
    }
    throw ParameterError("cannot parse exponent '" + text + "'");
}

double Exponent::value() const { return approx_; }

std::string Exponent::str() const
{
    if (infinite_) return "inf";
    if (!exact_) {
        std::ostringstream os;
        os.precision(17);
        os << approx_;
        return os.str();
    }
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

std::string to_string(AdmissibilityRule rule)
{
    switch (rule) {
    case AdmissibilityRule::free_1_3: return "free_1_3";
    case AdmissibilityRule::perturbed_1_4: return "perturbed_1_4";
    case AdmissibilityRule::local_5_1: return "local_5_1";
    }
    return "?";
}

AdmissibilityVerdict check_admissibility(const StrichartzTriple& triple, AdmissibilityRule rule)
{
    const int n = triple.n;
    if (n < 3 || n % 2 == 0) return fail(rule, "n odd >= 3");
    if (triple.gamma.is_infinite()) return fail(rule, "gamma finite");
    for (const auto* e : {&triple.p, &triple.q})
        if (!e->is_infinite() && !(e->value() > 0.0)) return fail(rule, e == &triple.p ? "p >= 2" : "q >= 2");

    const bool exact = triple.p.is_exact() && triple.q.is_exact() && triple.gamma.is_exact();
    if (exact) {
        auto recip = [](const Exponent& e) {
            return e.is_infinite() ? Rational(0) : Rational(e.denominator(), e.numerator());
        };
        return evaluate<Rational>(recip(triple.p), recip(triple.q),
                                  Rational(triple.gamma.numerator(), triple.gamma.denominator()), n, rule, true);
    }
    auto recip = [](const Exponent& e) { return e.is_infinite() ? 0.0 : 1.0 / e.value(); };
    return evaluate<double>(recip(triple.p), recip(triple.q), triple.gamma.value(), n, rule, false);
}

std::string admissibility_table(const std::vector<StrichartzTriple>& triples)
{
    std::ostringstream os;
    os << "n,p,q,gamma,rule,passed,binding_constraint\n";
    for (const auto& t : triples) {
        for (auto rule : {AdmissibilityRule::free_1_3, AdmissibilityRule::perturbed_1_4, AdmissibilityRule::local_5_1}) {
            const auto v = check_admissibility(t, rule);
            os << t.n << ',' << t.p.str() << ',' << t.q.str() << ',' << t.gamma.str() << ',' << to_string(rule) << ','
               << (v.passed ? "true" : "false") << ",\"" << v.binding_constraint << "\"\n";
        }
    }
    return os.str();
}

} // namespace wavelab
