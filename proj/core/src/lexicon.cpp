#include "airsteward/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "airsteward/codec.hpp"
#include "airsteward/json_reader.hpp"
#include "embedded_data.hpp"

namespace airsteward::extract {

using nlohmann::json;

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

template <typename E>
std::map<std::string, E> read_phrase_map(ObjectReader& r, std::string_view key) {
  const auto& obj = r.required(key);
  ObjectReader entries(obj, r.field(key));
  std::map<std::string, E> out;
  for (const auto& [phrase, value] : obj.items()) {
    const std::string field = entries.field(phrase);
    if (phrase.empty()) throw SchemaError(fmt::format("{} has an empty phrase", r.field(key)), field);
    out[lowercase(phrase)] = ObjectReader::as_enum<E>(value, field);
  }
  return out;
}

std::vector<std::string> read_list(ObjectReader& r, std::string_view key,
                                   std::vector<std::string> fallback) {
  const auto* v = r.optional(key);
  if (!v) return fallback;
  if (!v->is_array()) throw SchemaError(fmt::format("{} must be a list", r.field(key)), r.field(key));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    out.push_back(lowercase(ObjectReader::as_string((*v)[i], fmt::format("{}[{}]", r.field(key), i))));
  }
  return out;
}

template <typename E>
json phrase_map_to_json(const std::map<std::string, E>& m) {
  json out = json::object();
  for (const auto& [phrase, value] : m) out[phrase] = to_string(value);
  return out;
}

}  // namespace

Lexicon lexicon_from_json(const json& j) {
  ObjectReader r(j, "");
  Lexicon lex;
  if (const auto* lang = r.optional("language")) lex.language = ObjectReader::as_string(*lang, "language");
  lex.group_aliases = read_phrase_map<PopulationGroup>(r, "group_aliases");
  lex.condition_triggers = read_phrase_map<HealthCondition>(r, "condition_triggers");
  lex.preference_triggers = read_phrase_map<ThermalPreference>(r, "preference_triggers");
  lex.recovery_cues = read_list(r, "recovery_cues", {});
  if (!r.contains("recovery_cues")) throw SchemaError("missing field recovery_cues", "recovery_cues");
  if (lex.recovery_cues.empty()) {
    throw SchemaError("recovery_cues must not be empty", "recovery_cues");
  }
  lex.first_person = read_list(r, "first_person", {"i", "me", "my", "myself", "mine"});
  lex.third_person =
      read_list(r, "third_person", {"she", "he", "her", "his", "him", "they", "them", "their"});
  lex.condition_anaphora = read_list(r, "condition_anaphora", {"it", "that", "this"});
  r.finish();
  return lex;
}

json to_json(const Lexicon& lex) {
  return {{"language", lex.language},
          {"group_aliases", phrase_map_to_json(lex.group_aliases)},
          {"condition_triggers", phrase_map_to_json(lex.condition_triggers)},
          {"preference_triggers", phrase_map_to_json(lex.preference_triggers)},
          {"recovery_cues", lex.recovery_cues},
          {"first_person", lex.first_person},
          {"third_person", lex.third_person},
          {"condition_anaphora", lex.condition_anaphora}};
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open lexicon {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return lexicon_from_json(parse_json(buf.str()));
}

const Lexicon& default_lexicon() {
  static const Lexicon lex = lexicon_from_json(parse_json(embedded::k_lexicon));
  return lex;
}

}  // namespace airsteward::extract
