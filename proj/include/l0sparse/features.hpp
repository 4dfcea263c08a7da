#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "l0sparse/matrix.hpp"

namespace l0sparse {

// Declarative dictionary description: polynomial, Fourier, or an ordered
// concatenation of sub-libraries.
struct LibrarySpec {
    enum class Kind { polynomial, fourier, generalized };

    Kind kind = Kind::polynomial;

    // polynomial
    int degree = 3;
    bool include_bias = true;
    bool include_interactions = true;

    // fourier
    int n_frequencies = 1;
    bool include_sin = true;
    bool include_cos = true;
    bool interaction_terms = false;  // accepted but unsupported; see validate()

    // generalized
    std::vector<LibrarySpec> parts;

    static LibrarySpec polynomial_lib(int degree, bool bias = true, bool interactions = true) {
        LibrarySpec s;
        s.kind = Kind::polynomial;
        s.degree = degree;
        s.include_bias = bias;
        s.include_interactions = interactions;
        return s;
    }

    static LibrarySpec fourier_lib(int n_frequencies, bool use_sin = true, bool use_cos = true) {
        LibrarySpec s;
        s.kind = Kind::fourier;
        s.n_frequencies = n_frequencies;
        s.include_sin = use_sin;
        s.include_cos = use_cos;
        return s;
    }

    static LibrarySpec generalized_lib(std::vector<LibrarySpec> parts) {
        LibrarySpec s;
        s.kind = Kind::generalized;
        s.parts = std::move(parts);
        return s;
    }

    void validate() const {
        switch (kind) {
            case Kind::polynomial:
                if (degree < 1) throw std::invalid_argument("LibrarySpec: degree must be >= 1");
                break;
            case Kind::fourier:
                if (n_frequencies < 1)
                    throw std::invalid_argument("LibrarySpec: n_frequencies must be >= 1");
                if (interaction_terms)
                    std::cerr << "warning: fourier interaction_terms is not supported; ignored\n";
                break;
            case Kind::generalized:
                if (parts.empty())
                    throw std::invalid_argument("LibrarySpec: generalized library needs parts");
                for (const LibrarySpec& p : parts) p.validate();
                break;
        }
    }
};

// Canonical feature ordering and names for a library over input_dim inputs.
struct FeatureMap {
    std::size_t input_dim = 0;
    std::size_t n_features = 0;
    std::vector<std::string> names;
};

namespace detail {

inline std::string monomial_name(const std::vector<int>& exponents) {
    std::string name;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        if (exponents[i] == 0) continue;
        if (!name.empty()) name += "*";
        name += "x" + std::to_string(i);
        if (exponents[i] > 1) name += "^" + std::to_string(exponents[i]);
    }
    return name.empty() ? "1" : name;
}

// Exponent vectors of total degree `total`, descending lexicographic order
// (earlier inputs vary slowest).
inline void enumerate_exponents(std::size_t input_dim, int total, std::vector<int>& current,
                                std::size_t pos, const std::function<void(const std::vector<int>&)>& emit) {
    if (pos + 1 == input_dim) {
        current[pos] = total;
        emit(current);
        return;
    }
    for (int e = total; e >= 0; --e) {
        current[pos] = e;
        enumerate_exponents(input_dim, total - e, current, pos + 1, emit);
    }
}

inline void for_each_monomial(const LibrarySpec& spec, std::size_t input_dim,
                              const std::function<void(const std::vector<int>&)>& emit) {
    std::vector<int> exps(input_dim, 0);
    if (spec.include_bias) emit(exps);
    for (int total = 1; total <= spec.degree; ++total) {
        if (spec.include_interactions) {
            enumerate_exponents(input_dim, total, exps, 0, emit);
        } else {
            for (std::size_t i = 0; i < input_dim; ++i) {
                std::fill(exps.begin(), exps.end(), 0);
                exps[i] = total;
                emit(exps);
            }
        }
    }
}

}  // namespace detail

inline FeatureMap library_dim_and_names(const LibrarySpec& spec, std::size_t input_dim) {
    if (input_dim < 1) throw std::invalid_argument("library_dim_and_names: input_dim must be >= 1");
    spec.validate();
    FeatureMap map;
    map.input_dim = input_dim;
    switch (spec.kind) {
        case LibrarySpec::Kind::polynomial:
            detail::for_each_monomial(spec, input_dim, [&](const std::vector<int>& exps) {
                map.names.push_back(detail::monomial_name(exps));
            });
            break;
        case LibrarySpec::Kind::fourier:
            for (int k = 1; k <= spec.n_frequencies; ++k)
                for (std::size_t i = 0; i < input_dim; ++i) {
                    const std::string arg = std::to_string(k) + "*x" + std::to_string(i);
                    if (spec.include_sin) map.names.push_back("sin(" + arg + ")");
                    if (spec.include_cos) map.names.push_back("cos(" + arg + ")");
                }
            break;
        case LibrarySpec::Kind::generalized:
            for (const LibrarySpec& part : spec.parts) {
                FeatureMap sub = library_dim_and_names(part, input_dim);
                map.names.insert(map.names.end(), sub.names.begin(), sub.names.end());
            }
            break;
    }
    map.n_features = map.names.size();
    return map;
}

// Evaluates the library columns for every row of X, in FeatureMap order.
inline Matrix transform(const LibrarySpec& spec, const Matrix& x) {
    spec.validate();
    const std::size_t input_dim = x.cols();
    if (input_dim < 1) throw std::invalid_argument("transform: input_dim must be >= 1");

    switch (spec.kind) {
        case LibrarySpec::Kind::polynomial: {
            std::vector<std::vector<int>> monomials;
            detail::for_each_monomial(spec, input_dim,
                                      [&](const std::vector<int>& e) { monomials.push_back(e); });
            Matrix phi(x.rows(), monomials.size());
            for (std::size_t r = 0; r < x.rows(); ++r) {
                const double* in = x.row(r);
                double* out = phi.row(r);
                for (std::size_t f = 0; f < monomials.size(); ++f) {
                    double v = 1.0;
                    for (std::size_t i = 0; i < input_dim; ++i)
                        for (int e = 0; e < monomials[f][i]; ++e) v *= in[i];
                    out[f] = v;
                }
            }
            return phi;
        }
        case LibrarySpec::Kind::fourier: {
            const std::size_t per_pair =
                (spec.include_sin ? 1u : 0u) + (spec.include_cos ? 1u : 0u);
            Matrix phi(x.rows(), static_cast<std::size_t>(spec.n_frequencies) * input_dim * per_pair);
            for (std::size_t r = 0; r < x.rows(); ++r) {
                const double* in = x.row(r);
                double* out = phi.row(r);
                std::size_t f = 0;
                for (int k = 1; k <= spec.n_frequencies; ++k)
                    for (std::size_t i = 0; i < input_dim; ++i) {
                        if (spec.include_sin) out[f++] = std::sin(k * in[i]);
                        if (spec.include_cos) out[f++] = std::cos(k * in[i]);
                    }
            }
            return phi;
        }
        case LibrarySpec::Kind::generalized: {
            Matrix phi(x.rows(), 0);
            bool first = true;
            for (const LibrarySpec& part : spec.parts) {
                Matrix sub = transform(part, x);
                phi = first ? std::move(sub) : hconcat(phi, sub);
                first = false;
            }
            return phi;
        }
    }
    throw std::logic_error("transform: unreachable");
}

}  // namespace l0sparse
