#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qma/error.hpp"

namespace qma {

/// Syntax, identifier or arity error; `column` is 1-based.
class ExpressionError : public InputError {
public:
    ExpressionError(std::size_t column, const std::string& what)
        : InputError("column " + std::to_string(column) + ": " + what), column_(column) {}
    std::size_t column() const { return column_; }

private:
    std::size_t column_;
};

/// Variables an expression may reference: x0..x{4n-1}, plus t when allow_t.
struct ExpressionContext {
    std::size_t n = 1;
    bool allow_t = true;
};

enum class ExprOp { Number, Var, T, NormQ, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Abs, Sqrt, Min, Max };

struct ExprNode {
    ExprOp op = ExprOp::Number;
    double value = 0.0;     // Number
    std::size_t index = 0;  // Var
    std::vector<std::shared_ptr<const ExprNode>> args;

    friend bool operator==(const ExprNode& a, const ExprNode& b) {
        if (a.op != b.op || a.args.size() != b.args.size()) return false;
        if (a.op == ExprOp::Number && !(a.value == b.value || (std::isnan(a.value) && std::isnan(b.value))))
            return false;
        if (a.op == ExprOp::Var && a.index != b.index) return false;
        for (std::size_t i = 0; i < a.args.size(); ++i)
            if (!(*a.args[i] == *b.args[i])) return false;
        return true;
    }
};

using ExprPtr = std::shared_ptr<const ExprNode>;

namespace detail {

struct FunctionInfo {
    std::string_view name;
    ExprOp op;
    std::size_t arity;
};

inline constexpr std::array<FunctionInfo, 6> kFunctions{{{"exp", ExprOp::Exp, 1},
                                                         {"log", ExprOp::Log, 1},
                                                         {"abs", ExprOp::Abs, 1},
                                                         {"sqrt", ExprOp::Sqrt, 1},
                                                         {"min", ExprOp::Min, 2},
                                                         {"max", ExprOp::Max, 2}}};

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::size_t column;  // 1-based, in code points
    std::string text;
    double value = 0.0;
};

inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0, col = 1;
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    while (i < s.size()) {
        const char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            ++col;
            continue;
        }
        if (s.substr(i, 3) == "\xE2\x88\x92") {  // U+2212 minus sign
            out.push_back({Tok::Minus, col, "-"});
            i += 3;
            ++col;
            continue;
        }
        if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
            std::size_t j = i;
            while (j < s.size() && (is_digit(s[j]) || s[j] == '.')) ++j;
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && is_digit(s[k])) {
                    while (k < s.size() && is_digit(s[k])) ++k;
                    j = k;
                }
            }
            const std::string text(s.substr(i, j - i));
            double v = 0.0;
            const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
            if (res.ec != std::errc() || res.ptr != text.data() + text.size())
                throw ExpressionError(col, "malformed number '" + text + "'");
            out.push_back({Tok::Number, col, text, v});
            col += j - i;
            i = j;
            continue;
        }
        if (is_alpha(c)) {
            std::size_t j = i;
            while (j < s.size() && (is_alpha(s[j]) || is_digit(s[j]))) ++j;
            out.push_back({Tok::Ident, col, std::string(s.substr(i, j - i))});
            col += j - i;
            i = j;
            continue;
        }
        Tok k;
        switch (c) {
            case '+': k = Tok::Plus; break;
            case '-': k = Tok::Minus; break;
            case '*': k = Tok::Star; break;
            case '/': k = Tok::Slash; break;
            case '^': k = Tok::Caret; break;
            case '(': k = Tok::LParen; break;
            case ')': k = Tok::RParen; break;
            case ',': k = Tok::Comma; break;
            default: throw ExpressionError(col, std::string("unexpected character '") + c + "'");
        }
        out.push_back({k, col, std::string(1, c)});
        ++i;
        ++col;
    }
    out.push_back({Tok::End, col, ""});
    return out;
}

inline ExprPtr make_node(ExprOp op, std::vector<ExprPtr> args = {}, double value = 0.0, std::size_t index = 0) {
    auto node = std::make_shared<ExprNode>();
    node->op = op;
    node->value = value;
    node->index = index;
    node->args = std::move(args);
    return node;
}

class Parser {
public:
    Parser(std::vector<Token> toks, ExpressionContext ctx) : toks_(std::move(toks)), ctx_(ctx) {}

    ExprPtr parse() {
        ExprPtr e = additive();
        if (peek().kind != Tok::End) throw ExpressionError(peek().column, "unexpected '" + peek().text + "'");
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& take() { return toks_[pos_++]; }
    void expect(Tok k, const char* what) {
        if (peek().kind != k)
            throw ExpressionError(peek().column, std::string("expected ") + what +
                                                     (peek().kind == Tok::End ? " at end of input"
                                                                              : ", found '" + peek().text + "'"));
        ++pos_;
    }

    ExprPtr additive() {
        ExprPtr lhs = multiplicative();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            const ExprOp op = take().kind == Tok::Plus ? ExprOp::Add : ExprOp::Sub;
            lhs = make_node(op, {lhs, multiplicative()});
        }
        return lhs;
    }

    ExprPtr multiplicative() {
        ExprPtr lhs = unary();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            const ExprOp op = take().kind == Tok::Star ? ExprOp::Mul : ExprOp::Div;
            lhs = make_node(op, {lhs, unary()});
        }
        return lhs;
    }

    ExprPtr unary() {
        if (peek().kind == Tok::Minus) {
            take();
            return make_node(ExprOp::Neg, {unary()});
        }
        return power();
    }

    ExprPtr power() {
        ExprPtr base = primary();
        if (peek().kind == Tok::Caret) {
            take();
            return make_node(ExprOp::Pow, {base, unary()});
        }
        return base;
    }

    ExprPtr primary() {
        const Token& tok = peek();
        switch (tok.kind) {
            case Tok::Number: take(); return make_node(ExprOp::Number, {}, tok.value);
            case Tok::LParen: {
                take();
                ExprPtr e = additive();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident: return identifier();
            case Tok::End: throw ExpressionError(tok.column, "unexpected end of input");
            default: throw ExpressionError(tok.column, "unexpected '" + tok.text + "'");
        }
    }

    ExprPtr identifier() {
        const Token tok = take();
        for (const auto& fn : kFunctions) {
            if (tok.text != fn.name) continue;
            if (peek().kind != Tok::LParen)
                throw ExpressionError(tok.column, "function '" + tok.text + "' requires an argument list");
            take();
            std::vector<ExprPtr> args;
            if (peek().kind != Tok::RParen) {
                args.push_back(additive());
                while (peek().kind == Tok::Comma) {
                    take();
                    args.push_back(additive());
                }
            }
            expect(Tok::RParen, "')'");
            if (args.size() != fn.arity)
                throw ExpressionError(tok.column, "function '" + tok.text + "' takes " + std::to_string(fn.arity) +
                                                      " argument(s), got " + std::to_string(args.size()));
            return make_node(fn.op, std::move(args));
        }
        ExprPtr leaf;
        if (tok.text == "normq") {
            leaf = make_node(ExprOp::NormQ);
        } else if (tok.text == "t") {
            if (!ctx_.allow_t) throw ExpressionError(tok.column, "variable 't' is not available here");
            leaf = make_node(ExprOp::T);
        } else if (tok.text.size() > 1 && tok.text[0] == 'x' &&
                   tok.text.find_first_not_of("0123456789", 1) == std::string::npos &&
                   (tok.text.size() == 2 || tok.text[1] != '0')) {
            std::size_t idx = 0;
            std::from_chars(tok.text.data() + 1, tok.text.data() + tok.text.size(), idx);
            if (idx >= 4 * ctx_.n)
                throw ExpressionError(tok.column, "variable '" + tok.text + "' out of range: n = " +
                                                      std::to_string(ctx_.n) + " allows x0..x" +
                                                      std::to_string(4 * ctx_.n - 1));
            leaf = make_node(ExprOp::Var, {}, 0.0, idx);
        } else {
            throw ExpressionError(tok.column, "unknown identifier '" + tok.text + "'");
        }
        if (peek().kind == Tok::LParen) throw ExpressionError(peek().column, "'" + tok.text + "' is not a function");
        return leaf;
    }

    std::vector<Token> toks_;
    ExpressionContext ctx_;
    std::size_t pos_ = 0;
};

inline std::string_view op_symbol(ExprOp op) {
    switch (op) {
        case ExprOp::Add: return "+";
        case ExprOp::Sub: return "-";
        case ExprOp::Mul: return "*";
        case ExprOp::Div: return "/";
        case ExprOp::Pow: return "^";
        default: break;
    }
    for (const auto& fn : kFunctions)
        if (fn.op == op) return fn.name;
    return "?";
}

inline void print_node(const ExprNode& e, std::string& out) {
    switch (e.op) {
        case ExprOp::Number: {
            char buf[64];
            const auto res = std::to_chars(buf, buf + sizeof(buf), e.value);
            out.append(buf, res.ptr);
            return;
        }
        case ExprOp::Var: out += "x" + std::to_string(e.index); return;
        case ExprOp::T: out += "t"; return;
        case ExprOp::NormQ: out += "normq"; return;
        case ExprOp::Neg:
            out += "(-";
            print_node(*e.args[0], out);
            out += ")";
            return;
        case ExprOp::Add:
        case ExprOp::Sub:
        case ExprOp::Mul:
        case ExprOp::Div:
        case ExprOp::Pow:
            out += "(";
            print_node(*e.args[0], out);
            out += " ";
            out += op_symbol(e.op);
            out += " ";
            print_node(*e.args[1], out);
            out += ")";
            return;
        default:
            out += op_symbol(e.op);
            out += "(";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print_node(*e.args[i], out);
            }
            out += ")";
            return;
    }
}

struct Instr {
    ExprOp op;
    double value;
    std::size_t index;
};

inline void compile_node(const ExprNode& e, std::vector<Instr>& code, std::size_t depth, std::size_t& max_depth) {
    for (std::size_t i = 0; i < e.args.size(); ++i) compile_node(*e.args[i], code, depth + i, max_depth);
    code.push_back({e.op, e.value, e.index});
    max_depth = std::max(max_depth, depth + 1);
}

}  // namespace detail

/// Parsed arithmetic expression, compiled to postfix for evaluation.
class Expression {
public:
    Expression() = default;

    static Expression parse(std::string_view text, ExpressionContext ctx = {}) {
        detail::Parser p(detail::tokenize(text), ctx);
        return Expression(p.parse(), ctx);
    }

    const ExprNode& ast() const { return *root_; }
    const ExpressionContext& context() const { return ctx_; }

    /// Fully parenthesized text; parsing it again yields an identical AST.
    std::string to_string() const {
        std::string out;
        detail::print_node(*root_, out);
        return out;
    }

    bool uses_t() const {
        for (const auto& ins : code_)
            if (ins.op == ExprOp::T) return true;
        return false;
    }

    /// Evaluates at real coordinates x (length 4n) and time-like argument t.
    double operator()(std::span<const double> x, double t = 0.0) const {
        if (max_depth_ <= kInline) {
            std::array<double, kInline> stack;
            return run(x, t, stack.data());
        }
        std::vector<double> stack(max_depth_);
        return run(x, t, stack.data());
    }

private:
    static constexpr std::size_t kInline = 64;

    Expression(ExprPtr root, ExpressionContext ctx) : root_(std::move(root)), ctx_(ctx) {
        code_.clear();
        max_depth_ = 0;
        detail::compile_node(*root_, code_, 0, max_depth_);
    }

    double run(std::span<const double> x, double t, double* st) const {
        if (x.size() != 4 * ctx_.n) throw InputError("expression evaluated with wrong number of coordinates");
        std::size_t sp = 0;
        for (const auto& ins : code_) {
            switch (ins.op) {
                case ExprOp::Number: st[sp++] = ins.value; break;
                case ExprOp::Var: st[sp++] = x[ins.index]; break;
                case ExprOp::T: st[sp++] = t; break;
                case ExprOp::NormQ: {
                    double s = 0.0;
                    for (double v : x) s += v * v;
                    st[sp++] = s;
                    break;
                }
                case ExprOp::Neg: st[sp - 1] = -st[sp - 1]; break;
                case ExprOp::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
                case ExprOp::Log: st[sp - 1] = std::log(st[sp - 1]); break;
                case ExprOp::Abs: st[sp - 1] = std::abs(st[sp - 1]); break;
                case ExprOp::Sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
                default: {
                    const double b = st[--sp];
                    double& a = st[sp - 1];
                    switch (ins.op) {
                        case ExprOp::Add: a += b; break;
                        case ExprOp::Sub: a -= b; break;
                        case ExprOp::Mul: a *= b; break;
                        case ExprOp::Div: a /= b; break;
                        case ExprOp::Pow: a = std::pow(a, b); break;
                        case ExprOp::Min: a = std::min(a, b); break;
                        case ExprOp::Max: a = std::max(a, b); break;
                        default: break;
                    }
                }
            }
        }
        return st[0];
    }

    ExprPtr root_ = detail::make_node(ExprOp::Number);
    ExpressionContext ctx_;
    std::vector<detail::Instr> code_{{ExprOp::Number, 0.0, 0}};
    std::size_t max_depth_ = 1;
};

inline Expression parse_expression(std::string_view text, ExpressionContext ctx = {}) {
    return Expression::parse(text, ctx);
}

}  // namespace qma
