#include "airsteward/profile.hpp"

#include <fstream>
#include <mutex>

#include <fmt/format.h>

#include "airsteward/codec.hpp"

namespace airsteward::profile {

using nlohmann::json;

namespace {

constexpr std::string_view kSchema = "airsteward.profile";
constexpr int kVersion = 1;

constexpr std::array<std::string_view, 7> kOutcomeNames{
    "inserted", "refreshed", "removed", "noop", "preference_set", "group_registered", "ttl_expired"};

Outcome outcome_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kOutcomeNames.size(); ++i) {
    if (kOutcomeNames[i] == s) return static_cast<Outcome>(i);
  }
  throw std::invalid_argument(fmt::format("unknown outcome '{}'", s));
}

MemberProfile fresh_member(PopulationGroup group) {
  MemberProfile m;
  m.group = group;
  return m;
}

Outcome apply_one(Household& h, const MemoryTagRecord& r, Timestamp at) {
  auto it = h.members.find(r.group);
  switch (r.action) {
    case TagAction::AddCondition: {
      if (it == h.members.end()) it = h.members.emplace(r.group, fresh_member(r.group)).first;
      auto [pos, inserted] = it->second.conditions.insert_or_assign(*r.condition, at);
      return inserted ? Outcome::Inserted : Outcome::Refreshed;
    }
    case TagAction::RemoveCondition:
      if (it == h.members.end() || it->second.conditions.erase(*r.condition) == 0) {
        return Outcome::Noop;
      }
      return Outcome::Removed;
    case TagAction::SetPreference:
      if (it == h.members.end()) it = h.members.emplace(r.group, fresh_member(r.group)).first;
      it->second.preference = *r.preference;
      return Outcome::PreferenceSet;
    case TagAction::SetGroupInfo:
      if (it != h.members.end()) return Outcome::Noop;
      h.members.emplace(r.group, fresh_member(r.group));
      return Outcome::GroupRegistered;
  }
  return Outcome::Noop;
}

Timestamp clamp_now(const Household& h, Timestamp now) {
  if (!h.change_log.empty() && now < h.change_log.back().at) return h.change_log.back().at;
  return now;
}

LogEntry entry_from_json(const json& j) {
  LogEntry e;
  e.at = parse_timestamp(j.at("at").get<std::string>());
  e.record = record_from_json(j.at("record"), "record");
  e.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  return e;
}

}  // namespace

std::string_view to_string(Outcome o) { return kOutcomeNames[static_cast<std::size_t>(o)]; }

Household apply(const std::vector<MemoryTagRecord>& records, Household h, Timestamp now) {
  now = clamp_now(h, now);
  for (const auto& r : records) {
    const Outcome outcome = apply_one(h, r, now);
    h.change_log.push_back(LogEntry{now, r, outcome});
  }
  return h;
}

MemberProfile snapshot(const Household& h, PopulationGroup group) {
  auto it = h.members.find(group);
  return it == h.members.end() ? fresh_member(group) : it->second;
}

Household replay(const std::vector<LogEntry>& log) {
  Household h;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (!h.change_log.empty() && e.at < h.change_log.back().at) {
      throw std::invalid_argument(fmt::format("entry {} goes back in time", i));
    }
    const Outcome got = apply_one(h, e.record, e.at);
    const bool ok = got == e.outcome || (e.outcome == Outcome::TtlExpired && got == Outcome::Removed);
    if (!ok) {
      throw std::invalid_argument(fmt::format("entry {} logged as {} but replays as {}", i,
                                              to_string(e.outcome), to_string(got)));
    }
    h.change_log.push_back(e);
  }
  return h;
}

Household expire_stale(Household h, Timestamp now, std::optional<std::chrono::seconds> ttl) {
  if (!ttl) return h;
  if (ttl->count() <= 0) throw std::invalid_argument("ttl must be positive");
  now = clamp_now(h, now);
  for (auto& [group, member] : h.members) {
    for (auto it = member.conditions.begin(); it != member.conditions.end();) {
      if (it->second + *ttl < now) {
        MemoryTagRecord r;
        r.group = group;
        r.condition = it->first;
        r.action = TagAction::RemoveCondition;
        r.source_utterance_id = "ttl";
        h.change_log.push_back(LogEntry{now, r, Outcome::TtlExpired});
        it = member.conditions.erase(it);
      } else {
        ++it;
      }
    }
  }
  return h;
}

json to_json(const MemberProfile& m) {
  json conditions = json::object();
  for (const auto& [c, at] : m.conditions) conditions[std::string(to_string(c))] = format_timestamp(at);
  return {{"group", to_string(m.group)},
          {"preference", to_string(m.preference)},
          {"conditions", std::move(conditions)}};
}

json members_to_json(const Household& h) {
  json out = json::object();
  for (const auto& [g, m] : h.members) out[std::string(to_string(g))] = to_json(m);
  return out;
}

json to_json(const LogEntry& e) {
  return {{"at", format_timestamp(e.at)},
          {"record", airsteward::to_json(e.record)},
          {"outcome", to_string(e.outcome)}};
}

void persist(const Household& h, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp));
    const json header{{"schema", kSchema},
                      {"version", kVersion},
                      {"entries", h.change_log.size()},
                      {"members", members_to_json(h)}};
    out << canonical_dump(header) << '\n';
    for (const auto& e : h.change_log) out << canonical_dump(to_json(e)) << '\n';
    if (!out) throw std::runtime_error(fmt::format("write to {} failed", tmp));
  }
  std::filesystem::rename(tmp, path);
}

Household load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open profile {}", path.string()));

  auto corrupt = [&](std::size_t line, const std::string& why) {
    return CorruptFileError(fmt::format("{}:{}: {}", path.string(), line, why), line);
  };

  std::string line;
  if (!std::getline(in, line)) throw corrupt(1, "missing header");
  json header;
  std::size_t expected = 0;
  try {
    header = parse_json(line);
    if (header.at("schema") != kSchema) throw std::invalid_argument("not a profile file");
    if (header.at("version") != kVersion) {
      throw std::invalid_argument(fmt::format("unsupported version {}", header.at("version").dump()));
    }
    expected = header.at("entries").get<std::size_t>();
  } catch (const std::exception& e) {
    throw corrupt(1, e.what());
  }

  std::vector<LogEntry> log;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      log.push_back(entry_from_json(parse_json(line)));
    } catch (const std::exception& e) {
      throw corrupt(lineno, e.what());
    }
  }
  if (log.size() != expected) {
    throw corrupt(lineno + 1, fmt::format("expected {} entries, found {}", expected, log.size()));
  }
  Household h;
  try {
    h = replay(log);
  } catch (const std::exception& e) {
    throw corrupt(lineno, e.what());
  }
  if (members_to_json(h) != header.at("members")) {
    throw corrupt(1, "header members disagree with the replayed log");
  }
  return h;
}

// ---------------------------------------------------------------------------

std::vector<LogEntry> ProfileStore::apply(const std::vector<MemoryTagRecord>& records, Timestamp now) {
  std::unique_lock lock(mu_);
  const std::size_t before = h_.change_log.size();
  h_ = profile::apply(records, std::move(h_), now);
  return {h_.change_log.begin() + static_cast<std::ptrdiff_t>(before), h_.change_log.end()};
}

std::vector<LogEntry> ProfileStore::expire(Timestamp now, std::optional<std::chrono::seconds> ttl) {
  std::unique_lock lock(mu_);
  const std::size_t before = h_.change_log.size();
  h_ = expire_stale(std::move(h_), now, ttl);
  return {h_.change_log.begin() + static_cast<std::ptrdiff_t>(before), h_.change_log.end()};
}

Household ProfileStore::snapshot() const {
  std::shared_lock lock(mu_);
  return h_;
}

MemberProfile ProfileStore::snapshot(PopulationGroup group) const {
  std::shared_lock lock(mu_);
  return profile::snapshot(h_, group);
}

void ProfileStore::reset() {
  std::unique_lock lock(mu_);
  h_ = Household{};
}

void ProfileStore::persist(const std::filesystem::path& path) const {
  std::shared_lock lock(mu_);
  profile::persist(h_, path);
}

}  // namespace airsteward::profile
