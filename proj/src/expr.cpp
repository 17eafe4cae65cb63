#include "fbmtk/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace fbmtk {

namespace {

enum OpCode {
    kPushConst,
    kPushT,
    kPushX,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kPow,
    kNeg,
    kSin,
    kCos,
    kTan,
    kAtan,
    kExp,
    kLog,
    kSqrt,
    kAbs,
    kSinh,
    kCosh,
    kTanh,
};

struct FunctionEntry {
    const char* name;
    int code;
};

constexpr FunctionEntry kFunctions[] = {
    {"sin", kSin},   {"cos", kCos},   {"tan", kTan},  {"atan", kAtan},
    {"exp", kExp},   {"log", kLog},   {"sqrt", kSqrt}, {"abs", kAbs},
    {"sinh", kSinh}, {"cosh", kCosh}, {"tanh", kTanh},
};

} // namespace

class ExprParser {
public:
    explicit ExprParser(const std::string& text) : text_(text) {}

    CompiledExpr parse() {
        CompiledExpr out;
        out.text_ = text_;
        skip_space();
        if (pos_ >= text_.size()) fail("empty expression");
        expression(out);
        skip_space();
        if (pos_ < text_.size()) fail("unexpected trailing input");
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigInvalid("expression \"" + text_ + "\": " + what +
                            " at position " + std::to_string(pos_));
    }

    void skip_space() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(CompiledExpr& out, int code, double constant = 0.0) {
        out.program_.push_back({code, constant});
    }

    void expression(CompiledExpr& out) {
        term(out);
        for (;;) {
            if (eat('+'))
                term(out), emit(out, kAdd);
            else if (eat('-'))
                term(out), emit(out, kSub);
            else
                return;
        }
    }

    void term(CompiledExpr& out) {
        unary(out);
        for (;;) {
            if (eat('*'))
                unary(out), emit(out, kMul);
            else if (eat('/'))
                unary(out), emit(out, kDiv);
            else
                return;
        }
    }

    void unary(CompiledExpr& out) {
        if (eat('-')) {
            unary(out);
            emit(out, kNeg);
            return;
        }
        power(out);
    }

    void power(CompiledExpr& out) {
        primary(out);
        if (eat('^')) {
            // right associative, and -x^2 parses as -(x^2)
            unary(out);
            emit(out, kPow);
        }
    }

    void primary(CompiledExpr& out) {
        skip_space();
        if (pos_ >= text_.size()) fail("operand expected");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            expression(out);
            if (!eat(')')) fail("missing ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* start = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(start, &end);
            if (end == start) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - start);
            emit(out, kPushConst, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            identifier(out);
            return;
        }
        fail("operand expected");
    }

    void identifier(CompiledExpr& out) {
        std::size_t end = pos_;
        while (end < text_.size() &&
               std::isalnum(static_cast<unsigned char>(text_[end])))
            ++end;
        const std::string name = text_.substr(pos_, end - pos_);
        if (name == "t") {
            pos_ = end;
            out.uses_t_ = true;
            emit(out, kPushT);
            return;
        }
        if (name == "x") {
            pos_ = end;
            out.uses_x_ = true;
            emit(out, kPushX);
            return;
        }
        if (name == "pi") {
            pos_ = end;
            emit(out, kPushConst, 3.141592653589793);
            return;
        }
        for (const auto& fn : kFunctions) {
            if (name == fn.name) {
                pos_ = end;
                if (!eat('(')) fail("'" + name + "' needs a parenthesized argument");
                expression(out);
                if (!eat(')')) fail("missing ')'");
                emit(out, fn.code);
                return;
            }
        }
        fail("unknown name '" + name + "'");
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

double CompiledExpr::operator()(double t, double x) const {
    double stack[64];
    std::size_t top = 0;
    for (const Op& op : program_) {
        switch (op.code) {
            case kPushConst: stack[top++] = op.constant; break;
            case kPushT: stack[top++] = t; break;
            case kPushX: stack[top++] = x; break;
            case kAdd: --top; stack[top - 1] += stack[top]; break;
            case kSub: --top; stack[top - 1] -= stack[top]; break;
            case kMul: --top; stack[top - 1] *= stack[top]; break;
            case kDiv: --top; stack[top - 1] /= stack[top]; break;
            case kPow:
                --top;
                stack[top - 1] = std::pow(stack[top - 1], stack[top]);
                break;
            case kNeg: stack[top - 1] = -stack[top - 1]; break;
            case kSin: stack[top - 1] = std::sin(stack[top - 1]); break;
            case kCos: stack[top - 1] = std::cos(stack[top - 1]); break;
            case kTan: stack[top - 1] = std::tan(stack[top - 1]); break;
            case kAtan: stack[top - 1] = std::atan(stack[top - 1]); break;
            case kExp: stack[top - 1] = std::exp(stack[top - 1]); break;
            case kLog: stack[top - 1] = std::log(stack[top - 1]); break;
            case kSqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
            case kAbs: stack[top - 1] = std::abs(stack[top - 1]); break;
            case kSinh: stack[top - 1] = std::sinh(stack[top - 1]); break;
            case kCosh: stack[top - 1] = std::cosh(stack[top - 1]); break;
            case kTanh: stack[top - 1] = std::tanh(stack[top - 1]); break;
            default: break;
        }
    }
    return top ? stack[top - 1] : 0.0;
}

CompiledExpr compile_expression(const std::string& text) {
    ExprParser parser(text);
    CompiledExpr compiled = parser.parse();
    // depth check: the evaluator uses a fixed 64-slot stack
    std::size_t depth = 0, peak = 0;
    for (const auto& op : compiled.program_) {
        switch (op.code) {
            case kPushConst:
            case kPushT:
            case kPushX:
                ++depth;
                peak = std::max(peak, depth);
                break;
            case kAdd:
            case kSub:
            case kMul:
            case kDiv:
            case kPow:
                --depth;
                break;
            default:
                break;
        }
    }
    if (peak > 64)
        throw ConfigInvalid("expression \"" + text + "\": nesting too deep");
    return compiled;
}

} // namespace fbmtk
