#pragma once
// Arithmetic expressions in the variables t and x, compiled from config-file
// strings into a flat postfix program.  Grammar: + - * / ^ (right
// associative), unary minus, parentheses, numeric literals, pi, and the
// one-argument functions sin cos tan atan exp log sqrt abs sinh cosh tanh.

#include <string>
#include <vector>

#include "fbmtk/common.hpp"

namespace fbmtk {

class CompiledExpr {
public:
    double operator()(double t, double x) const;
    const std::string& text() const { return text_; }
    bool uses_t() const { return uses_t_; }
    bool uses_x() const { return uses_x_; }

private:
    friend CompiledExpr compile_expression(const std::string&);
    friend class ExprParser;
    struct Op {
        int code = 0;
        double constant = 0.0;
    };
    std::string text_;
    std::vector<Op> program_;
    bool uses_t_ = false;
    bool uses_x_ = false;
};

// Throws ConfigInvalid with a character position on any syntax error.
CompiledExpr compile_expression(const std::string& text);

} // namespace fbmtk
