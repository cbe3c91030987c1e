#include "kslab/envelope.hpp"

#include <cmath>
#include <limits>

namespace kslab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void lower_envelope_line(const double* f, std::size_t stride, std::size_t n, double w, double* out,
                         std::size_t out_stride) {
    std::vector<std::size_t> v;
    std::vector<double> z;
    v.reserve(n);
    z.reserve(n + 1);
    auto val = [&](std::size_t p) { return f[p * stride]; };
    for (std::size_t q = 0; q < n; ++q) {
        const double fq = val(q);
        if (!std::isfinite(fq)) continue;
        if (v.empty()) {
            v.push_back(q);
            z.push_back(-kInf);
            z.push_back(kInf);
            continue;
        }
        const double dq = static_cast<double>(q);
        double s = 0.0;
        while (true) {
            const double dp = static_cast<double>(v.back());
            s = ((fq + w * dq * dq) - (val(v.back()) + w * dp * dp)) / (2.0 * w * (dq - dp));
            if (s > z[v.size() - 1]) break;
            v.pop_back();
            z.pop_back();
        }
        z.back() = s;
        v.push_back(q);
        z.push_back(kInf);
    }
    if (v.empty()) {
        for (std::size_t q = 0; q < n; ++q) out[q * out_stride] = kInf;
        return;
    }
    std::size_t k = 0;
    auto eval = [&](std::size_t idx, std::size_t q) {
        const double d = static_cast<double>(q > v[idx] ? q - v[idx] : v[idx] - q);
        return val(v[idx]) + w * (d * d);
    };
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < static_cast<double>(q)) ++k;
        // Neighbouring parabolas are re-evaluated so that near-ties resolve to the true minimum.
        double best = eval(k, q);
        if (k > 0) best = std::min(best, eval(k - 1, q));
        if (k + 1 < v.size()) best = std::min(best, eval(k + 1, q));
        out[q * out_stride] = best;
    }
}

std::vector<double> separable_lower_envelope(const Grid& g, std::vector<double> f, double w) {
    const auto& c = g.counts();
    std::vector<double> buf;
    for (int axis = g.dim() - 1; axis >= 0; --axis) {
        std::size_t stride = 1;
        for (int a = axis + 1; a < 3; ++a) stride *= static_cast<std::size_t>(c[a]);
        const std::size_t n = static_cast<std::size_t>(c[axis]);
        buf.assign(n, 0.0);
        for (std::size_t start = 0; start < f.size(); ++start) {
            // start is the first node of a line when its axis coordinate is zero
            if ((start / stride) % n != 0) continue;
            lower_envelope_line(f.data() + start, stride, n, w, buf.data(), 1);
            for (std::size_t q = 0; q < n; ++q) f[start + q * stride] = buf[q];
        }
    }
    return f;
}

std::vector<double> distance_to_set(const Grid& g, const std::vector<std::uint8_t>& members) {
    std::vector<double> f(g.size(), kInf);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (members[i]) f[i] = 0.0;
    auto d2 = separable_lower_envelope(g, std::move(f), 1.0);
    for (auto& x : d2) x = std::isfinite(x) ? std::sqrt(x) * g.h() : kInf;
    return d2;
}

}  // namespace kslab
