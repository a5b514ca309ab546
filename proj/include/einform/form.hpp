#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace einform {

enum class ArgKind { test, trial, material };

/// One argument of a weak form term.
struct ArgDesc {
    std::string name;
    ArgKind kind = ArgKind::trial;
    std::size_t components = 1;  ///< 1 for scalar fields, D for vector fields
    std::string material = "m";  ///< owning material name, used for material args

    bool is_field() const { return kind != ArgKind::material; }
    bool is_vector() const { return components > 1; }
};

ArgDesc test_arg(std::string name, std::size_t components = 1);
ArgDesc trial_arg(std::string name, std::size_t components = 1);
ArgDesc material_arg(std::string name, std::string material = "m");

/// One comma-separated factor of a term.
///
///   0           scalar value
///   0.x         scalar gradient
///   x           vector component
///   x.y         component x differentiated along y
///   x:y         symmetric gradient (parsed only)
///   s(x:y)->Z   symmetric gradient in vector storage with index Z
///   letters     material subscripts, e.g. "ij", "IK" ("0" for a scalar material)
struct Factor {
    enum class Kind { scalar, scalar_grad, vector, vector_grad, sym_grad, sym_storage, material };

    Kind kind = Kind::scalar;
    std::string text;
    char comp = 0;     ///< component letter, 0 for scalar factors
    char grad = 0;     ///< gradient letter, 0 without a derivative
    char storage = 0;  ///< storage letter of s(x:y)->Z
    std::string material_subs;
};

struct FormExpression {
    std::string term;
    std::vector<ArgDesc> args;  ///< one per factor; a variable may appear more than once
    std::vector<Factor> factors;
};

/// Parses a term such as "i,i.j,j" against its arguments.
/// Throws ParseError for unknown factor syntax and ArityError when the number of
/// factors differs from the number of arguments.
FormExpression parse_form(std::string_view term, std::vector<ArgDesc> args);

}  // namespace einform
