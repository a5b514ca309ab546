#include "einform/form.hpp"

#include "einform/error.hpp"

#include <cctype>

namespace einform {

namespace {

bool is_lower(char ch) { return ch >= 'a' && ch <= 'z'; }
bool is_upper(char ch) { return ch >= 'A' && ch <= 'Z'; }

Factor parse_field_factor(const std::string& s) {
    Factor f;
    f.text = s;
    auto fail = [&]() -> Factor {
        throw ParseError("unknown factor syntax '" + s + "'");
    };
    if (s == "0") {
        f.kind = Factor::Kind::scalar;
        return f;
    }
    if (s.size() == 3 && s[0] == '0' && s[1] == '.' && is_lower(s[2])) {
        f.kind = Factor::Kind::scalar_grad;
        f.grad = s[2];
        return f;
    }
    if (s.size() == 1 && is_lower(s[0])) {
        f.kind = Factor::Kind::vector;
        f.comp = s[0];
        return f;
    }
    if (s.size() == 3 && is_lower(s[0]) && is_lower(s[2]) && (s[1] == '.' || s[1] == ':')) {
        f.kind = s[1] == '.' ? Factor::Kind::vector_grad : Factor::Kind::sym_grad;
        f.comp = s[0];
        f.grad = s[2];
        return f;
    }
    // s(x:y)->Z
    if (s.size() == 9 && s.compare(0, 2, "s(") == 0 && is_lower(s[2]) && s[3] == ':' &&
        is_lower(s[4]) && s.compare(5, 3, ")->") == 0 && is_upper(s[8])) {
        f.kind = Factor::Kind::sym_storage;
        f.comp = s[2];
        f.grad = s[4];
        f.storage = s[8];
        return f;
    }
    return fail();
}

Factor parse_material_factor(const std::string& s) {
    Factor f;
    f.text = s;
    f.kind = Factor::Kind::material;
    if (s == "0") return f;
    for (char ch : s) {
        if (!std::isalpha(static_cast<unsigned char>(ch))) {
            throw ParseError("material factor '" + s + "' must be letters or '0'");
        }
        if (f.material_subs.find(ch) != std::string::npos) {
            throw ParseError("material factor '" + s + "' repeats a letter");
        }
        f.material_subs.push_back(ch);
    }
    return f;
}

}  // namespace

ArgDesc test_arg(std::string name, std::size_t components) {
    return {std::move(name), ArgKind::test, components, "m"};
}

ArgDesc trial_arg(std::string name, std::size_t components) {
    return {std::move(name), ArgKind::trial, components, "m"};
}

ArgDesc material_arg(std::string name, std::string material) {
    return {std::move(name), ArgKind::material, 1, std::move(material)};
}

FormExpression parse_form(std::string_view term, std::vector<ArgDesc> args) {
    std::string clean;
    for (char ch : term) {
        if (!std::isspace(static_cast<unsigned char>(ch))) clean.push_back(ch);
    }
    if (clean.empty()) throw ParseError("empty term");

    std::vector<std::string> pieces;
    std::size_t start = 0;
    while (true) {
        const auto comma = clean.find(',', start);
        pieces.push_back(clean.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (pieces.size() != args.size()) {
        throw ArityError("term '" + clean + "' has " + std::to_string(pieces.size()) +
                         " factors but " + std::to_string(args.size()) + " arguments were given");
    }

    FormExpression form;
    form.term = clean;
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        if (pieces[k].empty()) throw ParseError("empty factor in '" + clean + "'");
        const auto& arg = args[k];
        if (arg.name.empty()) throw ArgumentError("argument " + std::to_string(k) + " has no name");
        if (arg.components == 0) throw ArgumentError("argument '" + arg.name + "' has no components");
        form.factors.push_back(arg.is_field() ? parse_field_factor(pieces[k])
                                              : parse_material_factor(pieces[k]));
        // One variable name, one description.
        for (std::size_t m = 0; m < k; ++m) {
            const auto& other = args[m];
            if (other.name == arg.name &&
                (other.kind != arg.kind || other.components != arg.components)) {
                throw ArgumentError("argument '" + arg.name + "' is described inconsistently");
            }
        }
    }
    form.args = std::move(args);
    return form;
}

}  // namespace einform
