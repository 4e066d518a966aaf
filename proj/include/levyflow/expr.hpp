// Arithmetic expressions over x1..xn for drift/diffusion field definitions.
// Grammar: + - * / ^ (right assoc), unary minus, parentheses, decimal
// literals, variables x1, x2, ..., and the constant pi. Parsed once into a
// postfix program; evaluation is allocation-free.
#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levyflow/errors.hpp"

namespace levyflow {

class Expr {
  public:
    Expr() = default;

    static Expr parse(std::string_view text, int dim) {
        Parser p{text, dim};
        Expr e;
        e.source_ = std::string(text);
        p.parse_expr(e.prog_);
        p.skip_ws();
        if (p.pos != text.size())
            throw ValidationError("expr: trailing input at '" +
                                  std::string(text.substr(p.pos)) + "' in \"" + e.source_ + "\"");
        if (e.prog_.empty()) throw ValidationError("expr: empty expression");
        e.fold_constants();
        return e;
    }

    double eval(std::span<const double> vars) const {
        std::array<double, kMaxStack> st;
        int top = -1;
        for (const Instr& in : prog_) {
            switch (in.op) {
                case Op::kConst: st[++top] = in.value; break;
                case Op::kVar: st[++top] = vars[static_cast<std::size_t>(in.var)]; break;
                case Op::kNeg: st[top] = -st[top]; break;
                case Op::kAdd: --top; st[top] += st[top + 1]; break;
                case Op::kSub: --top; st[top] -= st[top + 1]; break;
                case Op::kMul: --top; st[top] *= st[top + 1]; break;
                case Op::kDiv: --top; st[top] /= st[top + 1]; break;
                case Op::kPow: --top; st[top] = std::pow(st[top], st[top + 1]); break;
            }
        }
        return st[0];
    }

    // True when the expression folded to the literal 0 (lets the integrator
    // skip noise terms that are structurally absent).
    bool is_zero() const {
        return prog_.size() == 1 && prog_[0].op == Op::kConst && prog_[0].value == 0.0;
    }

    bool is_constant() const { return prog_.size() == 1 && prog_[0].op == Op::kConst; }

    const std::string& source() const { return source_; }

  private:
    enum class Op : std::uint8_t { kConst, kVar, kNeg, kAdd, kSub, kMul, kDiv, kPow };
    struct Instr {
        Op op;
        double value = 0.0;
        int var = 0;
    };
    static constexpr int kMaxStack = 64;

    std::vector<Instr> prog_;
    std::string source_;

    struct Parser {
        std::string_view text;
        int dim;
        std::size_t pos = 0;
        int depth = 0;

        void skip_ws() {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        }

        bool consume(char c) {
            skip_ws();
            if (pos < text.size() && text[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        char peek() {
            skip_ws();
            return pos < text.size() ? text[pos] : '\0';
        }

        void parse_expr(std::vector<Instr>& out) {
            if (++depth > kMaxStack) throw ValidationError("expr: nesting too deep");
            parse_term(out);
            while (true) {
                if (consume('+')) {
                    parse_term(out);
                    out.push_back({Op::kAdd});
                } else if (consume('-')) {
                    parse_term(out);
                    out.push_back({Op::kSub});
                } else {
                    break;
                }
            }
            --depth;
        }

        void parse_term(std::vector<Instr>& out) {
            parse_unary(out);
            while (true) {
                if (consume('*')) {
                    parse_unary(out);
                    out.push_back({Op::kMul});
                } else if (consume('/')) {
                    parse_unary(out);
                    out.push_back({Op::kDiv});
                } else {
                    break;
                }
            }
        }

        void parse_unary(std::vector<Instr>& out) {
            if (consume('-')) {
                parse_unary(out);
                out.push_back({Op::kNeg});
                return;
            }
            parse_power(out);
        }

        void parse_power(std::vector<Instr>& out) {
            parse_atom(out);
            if (consume('^')) {
                parse_unary(out);  // right associative, allows 2^-3
                out.push_back({Op::kPow});
            }
        }

        void parse_atom(std::vector<Instr>& out) {
            skip_ws();
            if (pos >= text.size()) throw ValidationError("expr: unexpected end of input");
            const char c = text[pos];
            if (c == '(') {
                ++pos;
                parse_expr(out);
                if (!consume(')')) throw ValidationError("expr: missing ')'");
                return;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const char* begin = text.data() + pos;
                char* end = nullptr;
                const double v = std::strtod(begin, &end);
                if (end == begin) throw ValidationError("expr: bad number");
                pos += static_cast<std::size_t>(end - begin);
                out.push_back({Op::kConst, v});
                return;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t e = pos;
                while (e < text.size() &&
                       (std::isalnum(static_cast<unsigned char>(text[e])) || text[e] == '_'))
                    ++e;
                const std::string_view name = text.substr(pos, e - pos);
                pos = e;
                if (name == "pi") {
                    out.push_back({Op::kConst, std::numbers::pi});
                    return;
                }
                if (name == "x" && dim == 1) {  // 1D convenience alias for x1
                    out.push_back({Op::kVar, 0.0, 0});
                    return;
                }
                if (name.size() >= 2 && name[0] == 'x') {
                    int idx = 0;
                    for (std::size_t i = 1; i < name.size(); ++i) {
                        if (!std::isdigit(static_cast<unsigned char>(name[i]))) { idx = -1; break; }
                        idx = idx * 10 + (name[i] - '0');
                    }
                    if (idx >= 1 && idx <= dim) {
                        out.push_back({Op::kVar, 0.0, idx - 1});
                        return;
                    }
                    if (idx > dim)
                        throw ValidationError("expr: variable '" + std::string(name) +
                                              "' out of range for dimension " + std::to_string(dim));
                }
                throw ValidationError("expr: unknown identifier '" + std::string(name) + "'");
            }
            throw ValidationError(std::string("expr: unexpected character '") + c + "'");
        }
    };

    void fold_constants() {
        std::vector<Instr> folded;
        folded.reserve(prog_.size());
        auto is_const = [&](int back) {
            return static_cast<int>(folded.size()) > back &&
                   folded[folded.size() - 1 - static_cast<std::size_t>(back)].op == Op::kConst;
        };
        for (const Instr& in : prog_) {
            switch (in.op) {
                case Op::kConst:
                case Op::kVar:
                    folded.push_back(in);
                    break;
                case Op::kNeg:
                    if (is_const(0)) {
                        folded.back().value = -folded.back().value;
                    } else {
                        folded.push_back(in);
                    }
                    break;
                default:
                    if (is_const(0) && is_const(1)) {
                        const double b = folded.back().value;
                        folded.pop_back();
                        double& a = folded.back().value;
                        switch (in.op) {
                            case Op::kAdd: a += b; break;
                            case Op::kSub: a -= b; break;
                            case Op::kMul: a *= b; break;
                            case Op::kDiv: a /= b; break;
                            case Op::kPow: a = std::pow(a, b); break;
                            default: break;
                        }
                    } else {
                        folded.push_back(in);
                    }
            }
        }
        prog_ = std::move(folded);
    }
};

}  // namespace levyflow
