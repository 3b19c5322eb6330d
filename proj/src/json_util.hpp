#pragma once

// Typed field access for hand-written JSON decoders. Every failure throws
// Error(kind) naming the offending field.

#include <string>
#include <string_view>

#include "ats/error.hpp"
#include "json.hpp"

namespace ats::json_util {

using nlohmann::json;

inline std::string path(std::string_view ctx, std::string_view key) {
  std::string out(ctx);
  if (!out.empty()) out += '.';
  out += key;
  return out;
}

inline const json& require(const json& doc, std::string_view key, std::string_view ctx,
                           ErrorKind kind = ErrorKind::Malformed) {
  if (!doc.is_object()) fail(kind, std::string(ctx.empty() ? "document" : ctx) + " must be an object");
  const auto it = doc.find(std::string(key));
  if (it == doc.end()) fail(kind, "missing field '" + path(ctx, key) + "'");
  return *it;
}

inline const json& require_object(const json& doc, std::string_view key, std::string_view ctx,
                                  ErrorKind kind = ErrorKind::Malformed) {
  const auto& v = require(doc, key, ctx, kind);
  if (!v.is_object()) fail(kind, "'" + path(ctx, key) + "' must be an object");
  return v;
}

inline const json& require_array(const json& doc, std::string_view key, std::string_view ctx,
                                 ErrorKind kind = ErrorKind::Malformed) {
  const auto& v = require(doc, key, ctx, kind);
  if (!v.is_array()) fail(kind, "'" + path(ctx, key) + "' must be an array");
  return v;
}

inline std::string require_string(const json& doc, std::string_view key, std::string_view ctx,
                                  ErrorKind kind = ErrorKind::Malformed) {
  const auto& v = require(doc, key, ctx, kind);
  if (!v.is_string()) fail(kind, "'" + path(ctx, key) + "' must be a string");
  return v.get<std::string>();
}

inline double require_number(const json& doc, std::string_view key, std::string_view ctx,
                             ErrorKind kind = ErrorKind::Malformed) {
  const auto& v = require(doc, key, ctx, kind);
  if (!v.is_number()) fail(kind, "'" + path(ctx, key) + "' must be a number");
  return v.get<double>();
}

inline long long require_integer(const json& doc, std::string_view key, std::string_view ctx,
                                 ErrorKind kind = ErrorKind::Malformed) {
  const auto& v = require(doc, key, ctx, kind);
  if (!v.is_number_integer()) fail(kind, "'" + path(ctx, key) + "' must be an integer");
  return v.get<long long>();
}

inline bool has(const json& doc, std::string_view key) {
  if (!doc.is_object()) return false;
  const auto it = doc.find(std::string(key));
  return it != doc.end() && !it->is_null();
}

inline json parse(std::string_view text, std::string_view what, ErrorKind kind = ErrorKind::Malformed) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(kind, std::string(what) + ": " + e.what());
  }
}

}  // namespace ats::json_util
