#include "uhdg/expression.hpp"

#include "uhdg/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace uhdg::expr {

namespace {

Expr make(Node n) { return Expr(std::make_shared<const Node>(std::move(n))); }

Expr make_const(double v)
{
    Node n;
    n.op = Op::Const;
    n.value = v;
    return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr make_binary(Op op, const Expr& a, const Expr& b)
{
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    return make(std::move(n));
}

double eval_fn(Fn fn, double x)
{
    switch (fn) {
    case Fn::Sin: return std::sin(x);
    case Fn::Cos: return std::cos(x);
    case Fn::Tan: return std::tan(x);
    case Fn::Exp: return std::exp(x);
    case Fn::Log: return std::log(x);
    case Fn::Sqrt: return std::sqrt(x);
    case Fn::Abs: return std::abs(x);
    case Fn::Sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    }
    return 0.0;
}

const char* fn_name(Fn fn)
{
    switch (fn) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Tan: return "tan";
    case Fn::Exp: return "exp";
    case Fn::Log: return "log";
    case Fn::Sqrt: return "sqrt";
    case Fn::Abs: return "abs";
    case Fn::Sign: return "sign";
    }
    return "?";
}

bool lookup_fn(std::string_view name, Fn& out)
{
    static constexpr std::array<std::pair<std::string_view, Fn>, 8> table{{
        {"sin", Fn::Sin},
        {"cos", Fn::Cos},
        {"tan", Fn::Tan},
        {"exp", Fn::Exp},
        {"log", Fn::Log},
        {"sqrt", Fn::Sqrt},
        {"abs", Fn::Abs},
        {"sign", Fn::Sign},
    }};
    for (const auto& [n, f] : table) {
        if (n == name) {
            out = f;
            return true;
        }
    }
    return false;
}

bool same(const Expr& a, const Expr& b)
{
    if (&a.node() == &b.node())
        return true;
    const Node& x = a.node();
    const Node& y = b.node();
    if (x.op != y.op)
        return false;
    switch (x.op) {
    case Op::Const: return x.value == y.value;
    case Op::Var: return x.name == y.name;
    case Op::Neg: return same(x.a, y.a);
    case Op::Func: return x.fn == y.fn && same(x.a, y.a);
    default: return same(x.a, y.a) && same(x.b, y.b);
    }
}

// Recursive-descent parser.
class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr parse_all()
    {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != s_.size())
            fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        std::ostringstream os;
        os << "expression parse error at position " << pos_ << ": " << what
           << " in \"" << s_ << "\"";
        throw ParseError(os.str());
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_sum()
    {
        Expr lhs = parse_product();
        for (;;) {
            if (accept('+'))
                lhs = lhs + parse_product();
            else if (accept('-'))
                lhs = lhs - parse_product();
            else
                return lhs;
        }
    }

    Expr parse_product()
    {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = lhs * parse_unary();
            else if (accept('/'))
                lhs = lhs / parse_unary();
            else
                return lhs;
        }
    }

    Expr parse_unary()
    {
        if (accept('-'))
            return -parse_unary();
        if (accept('+'))
            return parse_unary();
        return parse_power();
    }

    Expr parse_power()
    {
        Expr base = parse_primary();
        if (accept('^'))
            return pow(base, parse_unary()); // right associative
        return base;
    }

    Expr parse_primary()
    {
        skip_ws();
        if (pos_ >= s_.size())
            fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            if (!accept(')'))
                fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.data() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin)
                fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return Expr(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string_view id = s_.substr(start, pos_ - start);
            Fn fn{};
            if (lookup_fn(id, fn)) {
                if (!accept('('))
                    fail("expected '(' after function " + std::string(id));
                Expr arg = parse_sum();
                if (!accept(')'))
                    fail("expected ')'");
                return apply(fn, arg);
            }
            if (id == "pi")
                return Expr(std::numbers::pi);
            if (id == "e")
                return Expr(std::numbers::e);
            return Expr::variable(std::string(id));
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

void collect_vars(const Expr& e, std::set<std::string>& out)
{
    const Node& n = e.node();
    switch (n.op) {
    case Op::Const: return;
    case Op::Var: out.insert(n.name); return;
    case Op::Neg:
    case Op::Func: collect_vars(n.a, out); return;
    default:
        collect_vars(n.a, out);
        collect_vars(n.b, out);
    }
}

void print(const Expr& e, std::ostream& os)
{
    const Node& n = e.node();
    switch (n.op) {
    case Op::Const: {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << n.value;
        if (n.value < 0)
            os << '(' << tmp.str() << ')';
        else
            os << tmp.str();
        return;
    }
    case Op::Var: os << n.name; return;
    case Op::Neg:
        os << "(-";
        print(n.a, os);
        os << ')';
        return;
    case Op::Func:
        os << fn_name(n.fn) << '(';
        print(n.a, os);
        os << ')';
        return;
    default: break;
    }
    const char sym = n.op == Op::Add   ? '+'
                     : n.op == Op::Sub ? '-'
                     : n.op == Op::Mul ? '*'
                     : n.op == Op::Div ? '/'
                                       : '^';
    os << '(';
    print(n.a, os);
    os << sym;
    print(n.b, os);
    os << ')';
}

} // namespace

namespace {

const std::shared_ptr<const Node>& zero_node()
{
    static const std::shared_ptr<const Node> z = std::make_shared<const Node>();
    return z;
}

} // namespace

Expr::Expr() = default;

const Node& Expr::node() const { return node_ ? *node_ : *zero_node(); }

Expr::Expr(double value)
{
    Node n;
    n.op = Op::Const;
    n.value = value;
    node_ = std::make_shared<const Node>(std::move(n));
}

Expr Expr::variable(std::string name)
{
    Node n;
    n.op = Op::Var;
    n.name = std::move(name);
    return Expr(std::make_shared<const Node>(std::move(n)));
}

bool Expr::is_constant() const { return node().op == Op::Const; }

bool Expr::is_constant(double value) const
{
    return node().op == Op::Const && node().value == value;
}

double Expr::constant_value() const { return node().value; }

std::string Expr::to_string() const
{
    std::ostringstream os;
    print(*this, os);
    return os.str();
}

std::vector<std::string> Expr::free_variables() const
{
    std::set<std::string> vars;
    collect_vars(*this, vars);
    return {vars.begin(), vars.end()};
}

bool Expr::depends_on(std::string_view var) const
{
    const auto vars = free_variables();
    return std::find(vars.begin(), vars.end(), var) != vars.end();
}

Expr operator+(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant())
        return make_const(a.constant_value() + b.constant_value());
    if (a.is_constant(0.0))
        return b;
    if (b.is_constant(0.0))
        return a;
    return make_binary(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant())
        return make_const(a.constant_value() - b.constant_value());
    if (b.is_constant(0.0))
        return a;
    if (a.is_constant(0.0))
        return -b;
    if (same(a, b))
        return make_const(0.0);
    return make_binary(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant())
        return make_const(a.constant_value() * b.constant_value());
    if (a.is_constant(0.0) || b.is_constant(0.0))
        return make_const(0.0);
    if (a.is_constant(1.0))
        return b;
    if (b.is_constant(1.0))
        return a;
    if (a.is_constant(-1.0))
        return -b;
    if (b.is_constant(-1.0))
        return -a;
    return make_binary(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0)
        return make_const(a.constant_value() / b.constant_value());
    if (a.is_constant(0.0))
        return make_const(0.0);
    if (b.is_constant(1.0))
        return a;
    return make_binary(Op::Div, a, b);
}

Expr operator-(const Expr& a)
{
    if (a.is_constant())
        return make_const(-a.constant_value());
    if (a.node().op == Op::Neg)
        return a.node().a;
    Node n;
    n.op = Op::Neg;
    n.a = a;
    return make(std::move(n));
}

Expr pow(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant())
        return make_const(std::pow(a.constant_value(), b.constant_value()));
    if (b.is_constant(0.0))
        return make_const(1.0);
    if (b.is_constant(1.0))
        return a;
    return make_binary(Op::Pow, a, b);
}

Expr apply(Fn fn, const Expr& a)
{
    if (a.is_constant())
        return make_const(eval_fn(fn, a.constant_value()));
    Node n;
    n.op = Op::Func;
    n.fn = fn;
    n.a = a;
    return make(std::move(n));
}

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

Expr diff(const Expr& e, std::string_view var)
{
    const Node& n = e.node();
    switch (n.op) {
    case Op::Const: return Expr(0.0);
    case Op::Var: return Expr(n.name == var ? 1.0 : 0.0);
    case Op::Add: return diff(n.a, var) + diff(n.b, var);
    case Op::Sub: return diff(n.a, var) - diff(n.b, var);
    case Op::Neg: return -diff(n.a, var);
    case Op::Mul: return diff(n.a, var) * n.b + n.a * diff(n.b, var);
    case Op::Div: {
        const Expr da = diff(n.a, var);
        const Expr db = diff(n.b, var);
        if (db.is_constant(0.0))
            return da / n.b;
        return (da * n.b - n.a * db) / pow(n.b, Expr(2.0));
    }
    case Op::Pow: {
        const Expr da = diff(n.a, var);
        if (n.b.is_constant()) {
            const double c = n.b.constant_value();
            return Expr(c) * pow(n.a, Expr(c - 1.0)) * da;
        }
        const Expr db = diff(n.b, var);
        return e * (db * apply(Fn::Log, n.a) + n.b * da / n.a);
    }
    case Op::Func: {
        const Expr da = diff(n.a, var);
        if (da.is_constant(0.0))
            return Expr(0.0);
        switch (n.fn) {
        case Fn::Sin: return apply(Fn::Cos, n.a) * da;
        case Fn::Cos: return -(apply(Fn::Sin, n.a) * da);
        case Fn::Tan: return (Expr(1.0) + pow(e, Expr(2.0))) * da;
        case Fn::Exp: return e * da;
        case Fn::Log: return da / n.a;
        case Fn::Sqrt: return da / (Expr(2.0) * e);
        case Fn::Abs: return apply(Fn::Sign, n.a) * da;
        case Fn::Sign:
            throw NonDifferentiable("sign(" + n.a.to_string() +
                                    ") has no classical derivative");
        }
    }
    }
    return Expr(0.0);
}

Expr substitute(const Expr& e, std::string_view var, const Expr& replacement)
{
    const Node& n = e.node();
    switch (n.op) {
    case Op::Const: return e;
    case Op::Var: return n.name == var ? replacement : e;
    case Op::Neg: return -substitute(n.a, var, replacement);
    case Op::Func: return apply(n.fn, substitute(n.a, var, replacement));
    case Op::Add: return substitute(n.a, var, replacement) + substitute(n.b, var, replacement);
    case Op::Sub: return substitute(n.a, var, replacement) - substitute(n.b, var, replacement);
    case Op::Mul: return substitute(n.a, var, replacement) * substitute(n.b, var, replacement);
    case Op::Div: return substitute(n.a, var, replacement) / substitute(n.b, var, replacement);
    case Op::Pow: return pow(substitute(n.a, var, replacement), substitute(n.b, var, replacement));
    }
    return e;
}

namespace {

struct Emitter {
    const std::vector<std::string>& slots;

    template <class Instr>
    std::size_t emit(const Expr& e, std::vector<Instr>& code)
    {
        const Node& n = e.node();
        switch (n.op) {
        case Op::Const: code.push_back({Op::Const, Fn::Sin, n.value, -1}); return 1;
        case Op::Var: {
            const auto it = std::find(slots.begin(), slots.end(), n.name);
            if (it == slots.end())
                throw ParseError("unbound variable '" + n.name + "' in expression " +
                                 e.to_string());
            code.push_back({Op::Var, Fn::Sin, 0.0, static_cast<int>(it - slots.begin())});
            return 1;
        }
        case Op::Neg: {
            const std::size_t d = emit(n.a, code);
            code.push_back({Op::Neg, Fn::Sin, 0.0, -1});
            return d;
        }
        case Op::Func: {
            const std::size_t d = emit(n.a, code);
            code.push_back({Op::Func, n.fn, 0.0, -1});
            return d;
        }
        default: {
            const std::size_t da = emit(n.a, code);
            const std::size_t db = emit(n.b, code);
            code.push_back({n.op, Fn::Sin, 0.0, -1});
            return std::max(da, db + 1);
        }
        }
    }
};

} // namespace

Compiled::Compiled(const Expr& e, const std::vector<std::string>& slots) : arity_(slots.size())
{
    Emitter em{slots};
    depth_ = em.emit(e, code_);
}

double Compiled::operator()(std::initializer_list<double> args) const
{
    return (*this)(std::span<const double>(args.begin(), args.size()));
}

double Compiled::operator()(std::span<const double> args) const
{
    constexpr std::size_t kInline = 64;
    std::array<double, kInline> inline_stack{};
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (depth_ > kInline) {
        heap_stack.resize(depth_);
        stack = heap_stack.data();
    }
    std::size_t top = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::Const: stack[top++] = in.value; break;
        case Op::Var: stack[top++] = args[static_cast<std::size_t>(in.slot)]; break;
        case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
        case Op::Func: stack[top - 1] = eval_fn(in.fn, stack[top - 1]); break;
        case Op::Add: --top; stack[top - 1] += stack[top]; break;
        case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
        case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
        case Op::Div: --top; stack[top - 1] /= stack[top]; break;
        case Op::Pow: {
            --top;
            const double ex = stack[top];
            double& base = stack[top - 1];
            if (ex == 2.0)
                base = base * base;
            else
                base = std::pow(base, ex);
            break;
        }
        }
    }
    return code_.empty() ? 0.0 : stack[0];
}

} // namespace uhdg::expr
