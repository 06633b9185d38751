#pragma once

// Model definition files.
//
//   n = 2
//   family = my_model            (optional label)
//   [h]
//   2,0 = 1/2                    multi-index = coefficient
//   0,2 = 0.5
//   [f]
//   1,0 : 0,0 = 1/2000           mode k : multi-index = coefficient
//   -1,0 : 0,0 = 1/2000
//   1,1 : 1,0 = 0.25 -0.5        complex coefficients as "re im"
//
// Coefficients are decimal numbers or rational strings "a/b".

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kamest/analytic_model.hpp"
#include "kamest/error.hpp"

namespace kamest {

namespace text {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_decimal(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("not a number: '" + std::string(s) + "'");
  return v;
}

/// Decimal or rational "a/b".
inline double parse_number(std::string_view s) {
  s = trim(s);
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return parse_decimal(s);
  const double num = parse_decimal(s.substr(0, slash));
  const double den = parse_decimal(s.substr(slash + 1));
  if (den == 0.0) throw ParseError("zero denominator in '" + std::string(s) + "'");
  return num / den;
}

/// "re" or "re im".
inline cplx parse_complex(std::string_view s) {
  s = trim(s);
  const auto sp = s.find_first_of(" \t");
  if (sp == std::string_view::npos) return {parse_number(s), 0.0};
  return {parse_number(s.substr(0, sp)), parse_number(s.substr(sp + 1))};
}

inline std::vector<int> parse_int_list(std::string_view s) {
  std::vector<int> out;
  s = trim(s);
  while (!s.empty()) {
    const auto comma = s.find(',');
    auto tok = trim(s.substr(0, comma));
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
      throw ParseError("not an integer list: '" + std::string(s) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

inline std::vector<double> parse_number_list(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_number(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

inline boost::property_tree::ptree read_ini_text(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(e.what());
  }
  return pt;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace text

inline ModelTables parse_model_tables(const std::string& text_content) {
  const auto pt = text::read_ini_text(text_content);
  ModelTables t;
  const auto n_str = pt.get_optional<std::string>("n");
  if (!n_str) throw ParseError("model file: missing 'n'");
  t.n = static_cast<int>(text::parse_decimal(*n_str));
  if (auto h = pt.get_child_optional("h")) {
    for (const auto& [key, node] : *h) {
      auto e = text::parse_int_list(key);
      if (static_cast<int>(e.size()) != t.n) throw ParseError("model file: h multi-index '" + key + "' has wrong length");
      t.h_terms.emplace_back(std::move(e), text::parse_number(node.data()));
    }
  }
  if (auto f = pt.get_child_optional("f")) {
    for (const auto& [key, node] : *f) {
      const auto colon = key.find(':');
      if (colon == std::string::npos) throw ParseError("model file: f key '" + key + "' must read 'k : multi-index'");
      ModelTables::FTerm ft;
      ft.k = text::parse_int_list(std::string_view(key).substr(0, colon));
      ft.exps = text::parse_int_list(std::string_view(key).substr(colon + 1));
      if (static_cast<int>(ft.k.size()) != t.n || static_cast<int>(ft.exps.size()) != t.n)
        throw ParseError("model file: f key '" + key + "' has wrong length");
      ft.coeff = text::parse_complex(node.data());
      t.f_terms.push_back(std::move(ft));
    }
  }
  return t;
}

inline AnalyticModel parse_model_text(const std::string& text_content) {
  const auto pt = text::read_ini_text(text_content);
  const std::string family = pt.get<std::string>("family", "user_spec");
  return model_from_tables(parse_model_tables(text_content), family);
}

inline AnalyticModel load_model_file(const std::string& path) { return parse_model_text(text::read_file(path)); }

}  // namespace kamest
