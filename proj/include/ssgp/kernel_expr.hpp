#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssgp/kernels.hpp"

namespace ssgp {

/// Parsed kernel expression, e.g. `brownian(diffusion=0.1) + matern32(lengthscale=5) * cosine(period=24)`.
///
/// Grammar (`*` binds tighter than `+`):
///   expr   := term ('+' term)*
///   term   := factor ('*' factor)*
///   factor := name '(' [key '=' number (',' key '=' number)*] ')' | '(' expr ')'
struct KernelSpec {
    enum class Kind { matern32, cosine, brownian, sum, product };

    Kind kind = Kind::matern32;
    std::vector<std::pair<std::string, double>> params;  // leaves only, canonical order
    std::vector<KernelSpec> children;                    // sum / product only

    bool is_leaf() const { return kind != Kind::sum && kind != Kind::product; }
};

namespace detail {

struct LeafSchema {
    std::string_view name;
    KernelSpec::Kind kind;
    std::vector<std::pair<std::string_view, double>> params;  // NaN default = required
};

inline const std::vector<LeafSchema>& leaf_schemas() {
    static const std::vector<LeafSchema> schemas = {
        {"matern32", KernelSpec::Kind::matern32, {{"lengthscale", std::nan("")}, {"variance", 1.0}}},
        {"cosine", KernelSpec::Kind::cosine, {{"period", std::nan("")}, {"variance", 1.0}}},
        {"brownian", KernelSpec::Kind::brownian, {{"diffusion", std::nan("")}}},
    };
    return schemas;
}

class KernelParser {
public:
    explicit KernelParser(std::string_view text) : text_(text) {}

    KernelSpec parse() {
        KernelSpec spec = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return spec;
    }

private:
    KernelSpec expr() {
        KernelSpec first = term();
        if (!peek('+')) return first;
        KernelSpec sum;
        sum.kind = KernelSpec::Kind::sum;
        sum.children.push_back(std::move(first));
        while (consume('+')) sum.children.push_back(term());
        return sum;
    }

    KernelSpec term() {
        KernelSpec first = factor();
        if (!peek('*')) return first;
        KernelSpec prod;
        prod.kind = KernelSpec::Kind::product;
        prod.children.push_back(std::move(first));
        while (consume('*')) prod.children.push_back(factor());
        return prod;
    }

    KernelSpec factor() {
        if (consume('(')) {
            KernelSpec inner = expr();
            expect(')');
            return inner;
        }
        const std::string name = identifier();
        const LeafSchema* schema = nullptr;
        for (const auto& s : leaf_schemas())
            if (s.name == name) schema = &s;
        if (schema == nullptr) fail("unknown kernel '" + name + "'");

        KernelSpec leaf;
        leaf.kind = schema->kind;
        for (const auto& [key, def] : schema->params) leaf.params.emplace_back(std::string(key), def);

        expect('(');
        if (!consume(')')) {
            do {
                const std::string key = identifier();
                expect('=');
                const double value = number();
                auto it = std::find_if(leaf.params.begin(), leaf.params.end(), [&](auto& p) { return p.first == key; });
                if (it == leaf.params.end()) fail("kernel '" + name + "' has no parameter '" + key + "'");
                it->second = value;
            } while (consume(','));
            expect(')');
        }
        for (const auto& [key, value] : leaf.params)
            if (std::isnan(value)) fail("kernel '" + name + "' requires parameter '" + key + "'");
        return leaf;
    }

    std::string identifier() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
        if (pos_ == start) fail("expected identifier");
        return std::string(text_.substr(start, pos_ - start));
    }

    double number() {
        skip_ws();
        double value = 0.0;
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        if (first != last && *first == '+') ++first;
        const auto res = std::from_chars(first, last, value);
        if (res.ec != std::errc()) fail("expected number");
        pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        return value;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool consume(char c) {
        if (!peek(c)) return false;
        ++pos_;
        return true;
    }

    void expect(char c) {
        if (!consume(c)) fail(std::string("expected '") + c + "'");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("kernel expression \"" + std::string(text_) + "\": " + msg + " at offset " +
                          std::to_string(pos_));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline std::string leaf_name(KernelSpec::Kind kind) {
    for (const auto& s : leaf_schemas())
        if (s.kind == kind) return std::string(s.name);
    return "?";
}

inline void collect_parameters(const KernelSpec& spec, std::vector<double>& out) {
    if (spec.is_leaf()) {
        for (const auto& p : spec.params) out.push_back(p.second);
        return;
    }
    for (const auto& child : spec.children) collect_parameters(child, out);
}

inline void assign_parameters(KernelSpec& spec, std::span<const double> values, std::size_t& cursor) {
    if (spec.is_leaf()) {
        for (auto& p : spec.params) {
            if (cursor >= values.size()) throw ShapeError("with_parameters: too few values");
            p.second = values[cursor++];
        }
        return;
    }
    for (auto& child : spec.children) assign_parameters(child, values, cursor);
}

}  // namespace detail

inline KernelSpec parse_kernel(std::string_view text) { return detail::KernelParser(text).parse(); }

/// Canonical text form; parse_kernel(to_string(s)) builds the same kernel.
inline std::string to_string(const KernelSpec& spec) {
    if (spec.is_leaf()) {
        std::string out = detail::leaf_name(spec.kind) + "(";
        for (std::size_t i = 0; i < spec.params.size(); ++i) {
            if (i) out += ", ";
            out += spec.params[i].first + "=" + detail::format_param(spec.params[i].second);
        }
        return out + ")";
    }
    const bool is_sum = spec.kind == KernelSpec::Kind::sum;
    std::string out;
    for (std::size_t i = 0; i < spec.children.size(); ++i) {
        if (i) out += is_sum ? " + " : " * ";
        const auto& child = spec.children[i];
        const bool wrap = !is_sum && child.kind == KernelSpec::Kind::sum;
        out += wrap ? "(" + to_string(child) + ")" : to_string(child);
    }
    return out;
}

inline StateSpaceKernel build(const KernelSpec& spec) {
    StateSpaceKernel k;
    switch (spec.kind) {
        case KernelSpec::Kind::matern32: k = matern32(spec.params[0].second, spec.params[1].second); break;
        case KernelSpec::Kind::cosine: k = cosine(spec.params[0].second, spec.params[1].second); break;
        case KernelSpec::Kind::brownian: k = brownian(spec.params[0].second); break;
        case KernelSpec::Kind::sum:
        case KernelSpec::Kind::product: {
            k = build(spec.children.front());
            for (std::size_t i = 1; i < spec.children.size(); ++i) {
                const StateSpaceKernel next = build(spec.children[i]);
                k = spec.kind == KernelSpec::Kind::sum ? add(k, next) : multiply(k, next);
            }
            break;
        }
    }
    k.expression = to_string(spec);
    return k;
}

inline StateSpaceKernel build(std::string_view expression) { return build(parse_kernel(expression)); }

/// Leaf parameter values in depth-first order.
inline std::vector<double> parameters(const KernelSpec& spec) {
    std::vector<double> out;
    detail::collect_parameters(spec, out);
    return out;
}

inline KernelSpec with_parameters(KernelSpec spec, std::span<const double> values) {
    std::size_t cursor = 0;
    detail::assign_parameters(spec, values, cursor);
    if (cursor != values.size()) throw ShapeError("with_parameters: too many values");
    return spec;
}

}  // namespace ssgp
