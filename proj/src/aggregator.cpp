#include "ats/aggregator.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include "ats/error.hpp"
#include "json_util.hpp"

namespace ats {

// Text of data/feedback_catalog.json, embedded at build time.
extern const char* const kDefaultFeedbackCatalog;

namespace {

using nlohmann::json;

struct Requirement {
  ClipState state;
  int AggregatorThresholds::*threshold;
};

struct Rule {
  LessonState result;
  std::array<Requirement, 2> requires_;
  std::size_t count;
};

using T = AggregatorThresholds;
using C = ClipState;
using L = LessonState;

// NumerousNoFaces tests the no-face clip count against its own threshold.
constexpr std::array<Rule, kLessonStateCount - 1> kRules = {{
    {L::NoFacePlusMultipleFaces, {{{C::NoFace, &T::no_face}, {C::MultipleFaces, &T::multiple_faces}}}, 2},
    {L::MultipleFaces, {{{C::MultipleFaces, &T::multiple_faces}}}, 1},
    {L::NumerousNoFaces, {{{C::NoFace, &T::numerous_no_faces}}}, 1},
    {L::TiredUnfocused, {{{C::Tired, &T::tired}, {C::Unfocused, &T::unfocused}}}, 2},
    {L::TiredConfused, {{{C::Tired, &T::tired}, {C::Confused, &T::confused}}}, 2},
    {L::UnfocusedConfused, {{{C::Unfocused, &T::unfocused}, {C::Confused, &T::confused}}}, 2},
    {L::EngagedTired, {{{C::Engaged, &T::engaged}, {C::Tired, &T::tired}}}, 2},
    {L::EngagedConfused, {{{C::Engaged, &T::engaged}, {C::Confused, &T::confused}}}, 2},
    {L::DisengagedConfused, {{{C::Disengaged, &T::disengaged}, {C::Confused, &T::confused}}}, 2},
    {L::TiredNoFace, {{{C::Tired, &T::tired}, {C::NoFace, &T::no_face}}}, 2},
    {L::TiredDisengaged, {{{C::Tired, &T::tired}, {C::Disengaged, &T::disengaged}}}, 2},
    {L::EngagedNoFace, {{{C::Engaged, &T::engaged}, {C::NoFace, &T::no_face}}}, 2},
    {L::DisengagedNoFace, {{{C::Disengaged, &T::disengaged}, {C::NoFace, &T::no_face}}}, 2},
    {L::EngagedUnfocused, {{{C::Engaged, &T::engaged}, {C::Unfocused, &T::unfocused}}}, 2},
    {L::NoFace, {{{C::NoFace, &T::no_face}}}, 1},
    {L::Unfocused, {{{C::Unfocused, &T::unfocused}}}, 1},
    {L::Tired, {{{C::Tired, &T::tired}}}, 1},
    {L::Engaged, {{{C::Engaged, &T::engaged}}}, 1},
    {L::Confused, {{{C::Confused, &T::confused}}}, 1},
    {L::Disengaged, {{{C::Disengaged, &T::disengaged}}}, 1},
}};

constexpr std::array<std::string_view, kLessonStateCount> kLessonStateNames = {
    "NoFacePlusMultipleFaces", "MultipleFaces",    "NumerousNoFaces", "TiredUnfocused",     "TiredConfused",
    "UnfocusedConfused",       "EngagedTired",     "EngagedConfused", "DisengagedConfused", "TiredNoFace",
    "TiredDisengaged",         "EngagedNoFace",    "DisengagedNoFace", "EngagedUnfocused",  "NoFace",
    "Unfocused",               "Tired",            "Engaged",         "Confused",           "Disengaged",
    "Neutral"};

std::optional<FeedbackVariant> parse_variant(std::string_view name) {
  if (name == "plain") return FeedbackVariant::Plain;
  if (name == "with_supplementary") return FeedbackVariant::WithSupplementary;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(LessonState state) noexcept { return kLessonStateNames[priority_index(state)]; }

std::optional<LessonState> parse_lesson_state(std::string_view name) noexcept {
  for (LessonState s : kLessonStatePriority) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

StateCounts::StateCounts(std::initializer_list<std::pair<ClipState, int>> init) {
  for (const auto& [state, n] : init) (*this)[state] += n;
}

StateCounts StateCounts::tally(std::span<const ClipState> states) {
  StateCounts counts;
  for (ClipState s : states) ++counts[s];
  return counts;
}

int StateCounts::total() const noexcept { return std::accumulate(counts_.begin(), counts_.end(), 0); }

LessonState aggregate(const StateCounts& counts, const ThresholdConfig& cfg) {
  for (const Rule& rule : kRules) {
    bool matched = true;
    for (std::size_t i = 0; i < rule.count && matched; ++i) {
      const Requirement& req = rule.requires_[i];
      matched = counts[req.state] > cfg.aggregator.*req.threshold;
    }
    if (matched) return rule.result;
  }
  return LessonState::Neutral;
}

std::string_view to_string(FeedbackVariant variant) noexcept {
  return variant == FeedbackVariant::Plain ? "plain" : "with_supplementary";
}

bool recommends_supplementary(LessonState state) noexcept {
  return state == LessonState::UnfocusedConfused || state == LessonState::EngagedConfused ||
         state == LessonState::DisengagedConfused || state == LessonState::Confused;
}

FeedbackCatalog FeedbackCatalog::from_json(const json& doc) {
  namespace ju = json_util;
  if (!doc.is_array()) fail(ErrorKind::Config, "feedback catalog must be an array of records");

  FeedbackCatalog catalog;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string ctx = "catalog[" + std::to_string(i) + "]";
    const auto& rec = doc[i];
    const std::string state_name = ju::require_string(rec, "state", ctx, ErrorKind::Config);
    const std::string variant_name = ju::require_string(rec, "variant", ctx, ErrorKind::Config);
    std::string message = ju::require_string(rec, "message", ctx, ErrorKind::Config);

    const auto state = parse_lesson_state(state_name);
    if (!state) fail(ErrorKind::Config, ctx + ": unknown state '" + state_name + "'");
    const auto variant = parse_variant(variant_name);
    if (!variant) fail(ErrorKind::Config, ctx + ": unknown variant '" + variant_name + "'");
    if (*variant == FeedbackVariant::WithSupplementary && !recommends_supplementary(*state)) {
      fail(ErrorKind::Config, ctx + ": state '" + state_name + "' has no supplementary variant");
    }
    if (message.empty()) fail(ErrorKind::Config, ctx + ": empty message");
    if (!catalog.messages_.emplace(std::pair{*state, *variant}, std::move(message)).second) {
      fail(ErrorKind::Config, ctx + ": duplicate entry for " + state_name + "/" + variant_name);
    }
  }

  for (LessonState s : kLessonStatePriority) {
    if (!catalog.messages_.contains({s, FeedbackVariant::Plain})) {
      fail(ErrorKind::Config, "feedback catalog is missing the plain message for " + std::string(to_string(s)));
    }
    if (recommends_supplementary(s) && !catalog.messages_.contains({s, FeedbackVariant::WithSupplementary})) {
      fail(ErrorKind::Config,
           "feedback catalog is missing the supplementary message for " + std::string(to_string(s)));
    }
  }
  return catalog;
}

FeedbackCatalog FeedbackCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot open feedback catalog " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(json_util::parse(buf.str(), path.string(), ErrorKind::Config));
}

const FeedbackCatalog& FeedbackCatalog::defaults() {
  static const FeedbackCatalog catalog = from_json(json::parse(kDefaultFeedbackCatalog));
  return catalog;
}

const std::string& FeedbackCatalog::message(LessonState state, FeedbackVariant variant) const {
  const auto it = messages_.find({state, variant});
  if (it == messages_.end()) {
    fail(ErrorKind::Config, "no " + std::string(to_string(variant)) + " message for " + std::string(to_string(state)));
  }
  return it->second;
}

json FeedbackCatalog::to_json() const {
  json doc = json::array();
  for (const auto& [key, message] : messages_) {
    doc.push_back({{"state", to_string(key.first)}, {"variant", to_string(key.second)}, {"message", message}});
  }
  return doc;
}

Feedback select_feedback(LessonState state, bool lesson_has_supplementary, const FeedbackCatalog& catalog) {
  const bool recommend = recommends_supplementary(state) && lesson_has_supplementary;
  return {catalog.message(state, recommend ? FeedbackVariant::WithSupplementary : FeedbackVariant::Plain), recommend};
}

}  // namespace ats
