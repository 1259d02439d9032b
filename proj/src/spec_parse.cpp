#include "voxmap/spec_parse.hpp"

#include <cctype>
#include <cstdlib>
#include <vector>

#include "voxmap/error.hpp"

namespace voxmap {

namespace {

struct Cursor {
    const std::string& s;
    size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool done() {
        skip_ws();
        return pos >= s.size();
    }
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos); }

    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    std::string word() {
        skip_ws();
        const size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        return s.substr(start, pos - start);
    }

    bool peek_word(const std::string& w) {
        const size_t save = pos;
        const bool ok = word() == w;
        pos = save;
        return ok;
    }

    uint64_t integer(uint64_t max) {
        skip_ws();
        const size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos == start) fail("expected an unsigned integer");
        const std::string tok = s.substr(start, pos - start);
        errno = 0;
        const uint64_t v = std::strtoull(tok.c_str(), nullptr, 10);
        if (errno != 0 || v > max) {
            pos = start;
            fail("integer out of range");
        }
        return v;
    }

    double number() {
        skip_ws();
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("expected a number");
        pos += static_cast<size_t>(end - begin);
        return v;
    }
};

OccupancyState parse_state_word(Cursor& c) {
    c.skip_ws();
    const size_t at = c.pos;
    const std::string w = c.word();
    if (w == "unknown") return OccupancyState::Unknown;
    if (w == "free") return OccupancyState::Free;
    if (w == "occupied") return OccupancyState::Occupied;
    c.pos = at;
    c.fail("expected one of unknown, free, occupied");
}

Predicate parse_or(Cursor& c);

Predicate parse_atom(Cursor& c) {
    if (c.eat('(')) {
        Predicate p = parse_or(c);
        if (!c.eat(')')) c.fail("expected ')'");
        return p;
    }
    c.skip_ws();
    const size_t at = c.pos;
    const std::string w = c.word();
    if (w == "not") return !parse_atom(c);
    if (w == "true") return Predicate::always_true();
    if (w == "state") {
        if (c.word() != "in") c.fail("expected 'in' after 'state'");
        if (!c.eat('(')) c.fail("expected '(' after 'state in'");
        unsigned mask = 0;
        do {
            mask |= 1u << static_cast<unsigned>(parse_state_word(c));
        } while (c.eat(','));
        if (!c.eat(')')) c.fail("expected ')' to close the state list");
        return Predicate::state_mask(mask);
    }
    if (w == "has_label") return Predicate::has_label(static_cast<uint16_t>(c.integer(0xffff)));
    if (w == "top_label") {
        if (!c.eat('=')) c.fail("expected '=' after 'top_label'");
        return Predicate::top_label_is(static_cast<uint16_t>(c.integer(0xffff)));
    }
    if (w == "updated_before")
        return Predicate::updated_before(static_cast<uint32_t>(c.integer(0xffffffffu)));
    if (w == "updated_at_or_after")
        return Predicate::updated_at_or_after(static_cast<uint32_t>(c.integer(0xffffffffu)));
    c.pos = at;
    c.fail(w.empty() ? "expected a predicate" : "unknown predicate '" + w + "'");
}

Predicate parse_and(Cursor& c) {
    Predicate p = parse_atom(c);
    while (true) {
        c.skip_ws();
        if (!c.peek_word("and")) return p;
        c.word();
        p = p && parse_atom(c);
    }
}

Predicate parse_or(Cursor& c) {
    Predicate p = parse_and(c);
    while (true) {
        c.skip_ws();
        if (!c.peek_word("or")) return p;
        c.word();
        p = p || parse_and(c);
    }
}

}  // namespace

Predicate parse_predicate(const std::string& spec) {
    Cursor c{spec};
    Predicate p = parse_or(c);
    if (!c.done()) c.fail("unexpected trailing input");
    return p;
}

Region parse_region(const std::string& spec) {
    Cursor c{spec};
    const std::string kind = c.word();
    if (kind == "all" || kind == "everything") {
        if (!c.done()) c.fail("unexpected trailing input");
        return Region::everything();
    }
    if (!c.eat(':')) c.fail("expected ':' after region kind");
    std::vector<double> nums;
    do {
        nums.push_back(c.number());
    } while (c.eat(','));
    if (!c.done()) c.fail("unexpected trailing input");
    if (kind == "aabb") {
        if (nums.size() != 6) c.fail("aabb needs 6 numbers: x0,y0,z0,x1,y1,z1");
        try {
            return Region::aabb({nums[0], nums[1], nums[2]}, {nums[3], nums[4], nums[5]});
        } catch (const InvalidConfigError& e) {
            c.fail(e.what());
        }
    }
    if (kind == "sphere") {
        if (nums.size() != 4) c.fail("sphere needs 4 numbers: cx,cy,cz,r");
        try {
            return Region::sphere({nums[0], nums[1], nums[2]}, nums[3]);
        } catch (const InvalidConfigError& e) {
            c.fail(e.what());
        }
    }
    Cursor at_start{spec};
    at_start.fail("unknown region kind '" + kind + "'");
}

}  // namespace voxmap
