#include "mapo/value.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <vector>

namespace mapo {

int date_cmp(const Date& a, const Date& b) {
  auto part = [](int x, int y) -> int {
    if (x < 0 || y < 0) return 0;  // missing part matches anything
    return x < y ? -1 : (x > y ? 1 : 0);
  };
  if (int c = part(a.year, b.year)) return c;
  if (int c = part(a.month, b.month)) return c;
  return part(a.day, b.day);
}

bool cell_eq(const Cell& a, const Cell& b) {
  if (a.index() != b.index()) return false;
  if (const double* x = std::get_if<double>(&a)) return *x == std::get<double>(b);
  if (const Date* x = std::get_if<Date>(&a)) return date_cmp(*x, std::get<Date>(b)) == 0;
  return std::get<std::string>(a) == std::get<std::string>(b);
}

bool CellList::operator==(const CellList& o) const {
  if (cells.size() != o.cells.size()) return false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cell_eq(cells[i], o.cells[i])) return false;
  }
  return true;
}

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::OutOfTable: return "OutOfTable";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::AmbiguousRows: return "AmbiguousRows";
  }
  return "UnknownError";
}

std::string canonical_number(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  double r = std::nearbyint(d);
  if (r == d && std::fabs(d) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(r));
    return buf;
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  (void)ec;
  return std::string(buf, ptr);
}

std::string fold_string(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
  }
  return out;
}

bool parse_date_string(const std::string& s, Date& out) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '-') {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  if (parts.size() != 3) return false;
  auto field = [](const std::string& f, int& v) {
    if (f == "xx" || f == "xxxx") {
      v = -1;
      return true;
    }
    if (f.empty() || f.size() > 4) return false;
    int acc = 0;
    for (char c : f) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      acc = acc * 10 + (c - '0');
    }
    v = acc;
    return true;
  };
  Date d;
  if (!field(parts[0], d.year) || !field(parts[1], d.month) || !field(parts[2], d.day)) {
    return false;
  }
  if (!d.valid()) return false;
  out = d;
  return true;
}

std::string canonical_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return canonical_number(*d);
  if (const Date* d = std::get_if<Date>(&c)) {
    char buf[40];
    std::string y = d->year >= 0 ? std::to_string(d->year) : "xxxx";
    if (d->month >= 0) {
      std::snprintf(buf, sizeof(buf), "%s-%02d", y.c_str(), d->month);
    } else {
      std::snprintf(buf, sizeof(buf), "%s-xx", y.c_str());
    }
    std::string ym = buf;
    if (d->day >= 0) {
      std::snprintf(buf, sizeof(buf), "%s-%02d", ym.c_str(), d->day);
    } else {
      std::snprintf(buf, sizeof(buf), "%s-xx", ym.c_str());
    }
    return buf;
  }
  return fold_string(std::get<std::string>(c));
}

}  // namespace mapo
