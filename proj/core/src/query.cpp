#include "triejoin/query.hpp"

#include <algorithm>
#include <cctype>

namespace triejoin {

namespace {

struct Cursor {
  const std::string& s;
  size_t i = 0;

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) i++;
  }
  bool eof() {
    skip_ws();
    return i >= s.size();
  }
  char peek() {
    skip_ws();
    return i < s.size() ? s[i] : '\0';
  }
  void expect(char c) {
    skip_ws();
    if (i >= s.size() || s[i] != c)
      throw QueryParseError(i, std::string("expected '") + c + "'");
    i++;
  }
  std::string ident() {
    skip_ws();
    size_t start = i;
    if (i >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i])))
      throw QueryParseError(i, "expected identifier");
    while (i < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
      i++;
    return s.substr(start, i - start);
  }
  std::vector<std::string> ident_list() {
    expect('(');
    std::vector<std::string> out;
    out.push_back(ident());
    while (peek() == ',') {
      expect(',');
      out.push_back(ident());
    }
    expect(')');
    return out;
  }
};

}  // namespace

Query parse_query(const std::string& text) {
  Cursor c{text};
  Query q;
  q.name = c.ident();
  q.head = c.ident_list();
  c.expect('=');
  for (;;) {
    Atom a;
    a.relation = c.ident();
    a.vars = c.ident_list();
    q.atoms.push_back(std::move(a));
    if (c.peek() != ',') break;
    c.expect(',');
  }
  if (c.peek() == '.') c.expect('.');
  if (!c.eof()) throw QueryParseError(c.i, "trailing input after query");

  for (const auto& h : q.head) {
    bool found = false;
    for (const auto& a : q.atoms)
      found = found || std::find(a.vars.begin(), a.vars.end(), h) != a.vars.end();
    if (!found)
      throw QueryParseError(0, "head variable '" + h + "' does not appear in any atom");
  }
  return q;
}

Query builtin_query(const std::string& name) {
  static const struct {
    const char* name;
    const char* text;
  } kTable[] = {
      {"path3", "path3(x,y,z) = R(x,y), S(y,z)."},
      {"path4", "path4(x,y,z,w) = R(x,y), S(y,z), T(z,w)."},
      {"cycle3", "cycle3(x,y,z) = R(x,y), S(y,z), T(z,x)."},
      {"cycle4", "cycle4(x,y,z,w) = R(x,y), S(y,z), T(z,w), U(w,x)."},
      {"clique4", "clique4(x,y,z,w) = R(x,y), S(y,z), T(z,w), U(w,x), V(z,x), W(w,y)."},
  };
  for (const auto& e : kTable)
    if (name == e.name) return parse_query(e.text);
  throw std::invalid_argument("unknown built-in query: " + name);
}

std::vector<std::string> builtin_query_names() {
  return {"path3", "path4", "cycle3", "cycle4", "clique4"};
}

}  // namespace triejoin
