#pragma once

// Household memory: one profile per population group, maintained by applying
// tag records. Every applied record is kept in an append-only change log, and
// replaying that log from empty reproduces the members exactly.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airsteward/schema.hpp"
#include "airsteward/time.hpp"

namespace airsteward::profile {

struct MemberProfile {
  PopulationGroup group = PopulationGroup::Other;
  ThermalPreference preference = ThermalPreference::Neutral;
  std::map<HealthCondition, Timestamp> conditions;  // condition -> added_at

  bool has(HealthCondition c) const { return conditions.count(c) != 0; }
  bool operator==(const MemberProfile&) const = default;
};

enum class Outcome { Inserted, Refreshed, Removed, Noop, PreferenceSet, GroupRegistered, TtlExpired };

struct LogEntry {
  Timestamp at;
  MemoryTagRecord record;
  Outcome outcome = Outcome::Noop;

  bool operator==(const LogEntry&) const = default;
};

struct Household {
  std::map<PopulationGroup, MemberProfile> members;
  std::vector<LogEntry> change_log;

  bool operator==(const Household&) const = default;
};

/// Applies records in order. `now` is clamped to the last log timestamp so the
/// log stays monotone.
Household apply(const std::vector<MemoryTagRecord>& records, Household h, Timestamp now);

/// Profile of one group; a never-seen group yields the default profile.
MemberProfile snapshot(const Household& h, PopulationGroup group);

/// Folds a change log over an empty household. Throws std::invalid_argument if
/// a logged outcome disagrees with the recomputed one.
Household replay(const std::vector<LogEntry>& log);

/// Removes conditions whose added_at + ttl < now. No ttl means no expiry.
/// Throws std::invalid_argument for a non-positive ttl.
Household expire_stale(Household h, Timestamp now, std::optional<std::chrono::seconds> ttl);

class CorruptFileError : public std::runtime_error {
 public:
  CorruptFileError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Header line followed by one JSON line per log entry.
void persist(const Household& h, const std::filesystem::path& path);
/// Throws std::runtime_error on I/O failure, CorruptFileError on bad content.
Household load(const std::filesystem::path& path);

std::string_view to_string(Outcome o);
nlohmann::json to_json(const MemberProfile& m);
nlohmann::json members_to_json(const Household& h);
nlohmann::json to_json(const LogEntry& e);

/// Thread-safe holder for one household: applies are serialized, snapshots
/// may run concurrently.
class ProfileStore {
 public:
  ProfileStore() = default;
  explicit ProfileStore(Household h) : h_(std::move(h)) {}

  /// Applies and returns the log entries written by this batch.
  std::vector<LogEntry> apply(const std::vector<MemoryTagRecord>& records, Timestamp now);
  std::vector<LogEntry> expire(Timestamp now, std::optional<std::chrono::seconds> ttl);
  Household snapshot() const;
  MemberProfile snapshot(PopulationGroup group) const;
  void reset();
  void persist(const std::filesystem::path& path) const;

 private:
  mutable std::shared_mutex mu_;
  Household h_;
};

}  // namespace airsteward::profile
