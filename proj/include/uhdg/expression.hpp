#pragma once

// Small symbolic expression engine: parsing, exact differentiation and a
// compiled evaluator. Grammar: numbers, identifiers, + - * / ^, unary minus,
// parentheses, the functions sin cos tan exp log sqrt abs sign, and the
// constants pi and e.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uhdg::expr {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Func };
enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sign };

struct Node;

class Expr {
public:
    Expr(); ///< the constant 0
    Expr(double value); // NOLINT(google-explicit-constructor)

    static Expr variable(std::string name);

    [[nodiscard]] bool is_constant() const;
    [[nodiscard]] bool is_constant(double value) const;
    [[nodiscard]] double constant_value() const;
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] std::vector<std::string> free_variables() const;
    [[nodiscard]] bool depends_on(std::string_view var) const;

    [[nodiscard]] const Node& node() const;
    [[nodiscard]] const std::shared_ptr<const Node>& ptr() const { return node_; }

    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<const Node> node_;
};

struct Node {
    Op op = Op::Const;
    double value = 0.0;
    std::string name;
    Fn fn = Fn::Sin;
    Expr a;
    Expr b;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, const Expr& b);
Expr apply(Fn fn, const Expr& a);

/// Parses an expression string. Throws ParseError with the offending position.
Expr parse(std::string_view text);

/// Exact derivative with respect to `var`. Throws NonDifferentiable for
/// functions without a classical derivative (sign).
Expr diff(const Expr& e, std::string_view var);

/// Replaces every occurrence of variable `var` by `replacement`.
Expr substitute(const Expr& e, std::string_view var, const Expr& replacement);

/// Flat postfix program with variables bound to argument slots.
class Compiled {
public:
    Compiled() = default;
    Compiled(const Expr& e, const std::vector<std::string>& slots);

    [[nodiscard]] double operator()(std::span<const double> args) const;
    [[nodiscard]] double operator()(std::initializer_list<double> args) const;
    [[nodiscard]] bool empty() const { return code_.empty(); }
    [[nodiscard]] std::size_t arity() const { return arity_; }

private:
    struct Instr {
        Op op;
        Fn fn;
        double value;
        int slot;
    };
    std::vector<Instr> code_;
    std::size_t depth_ = 0;
    std::size_t arity_ = 0;
};

} // namespace uhdg::expr
