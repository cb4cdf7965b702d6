#include "airsteward/time.hpp"

#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

namespace airsteward {
namespace {

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    throw std::invalid_argument(fmt::format("timestamp '{}' is truncated", text));
  }
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + count, value);
  if (ec != std::errc{} || ptr != first + count) {
    throw std::invalid_argument(fmt::format("timestamp '{}' has a non-digit at {}", text, pos));
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw std::invalid_argument(
        fmt::format("timestamp '{}' expected '{}' at offset {}", text, c, pos));
  }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const int y = read_digits(text, 0, 4);
  expect_char(text, 4, '-');
  const int mo = read_digits(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = read_digits(text, 8, 2);
  if (text.size() <= 10 || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) {
    throw std::invalid_argument(fmt::format("timestamp '{}' lacks a time part", text));
  }
  const int hh = read_digits(text, 11, 2);
  expect_char(text, 13, ':');
  const int mm = read_digits(text, 14, 2);
  expect_char(text, 16, ':');
  const int ss = read_digits(text, 17, 2);

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  int offset_minutes = 0;
  if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
    ++pos;
  } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    const int sign = text[pos] == '+' ? 1 : -1;
    const int oh = read_digits(text, pos + 1, 2);
    expect_char(text, pos + 3, ':');
    const int om = read_digits(text, pos + 4, 2);
    offset_minutes = sign * (oh * 60 + om);
    pos += 6;
  } else {
    throw std::invalid_argument(fmt::format("timestamp '{}' lacks a UTC designator", text));
  }
  if (pos != text.size()) {
    throw std::invalid_argument(fmt::format("timestamp '{}' has trailing characters", text));
  }

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw std::invalid_argument(fmt::format("timestamp '{}' is out of range", text));
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{ts - day_point};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     tod.hours().count(), tod.minutes().count(), tod.seconds().count());
}

unsigned month_of(Timestamp ts) {
  using namespace std::chrono;
  return static_cast<unsigned>(year_month_day{floor<days>(ts)}.month());
}

}  // namespace airsteward
