#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "regime/error.hpp"

namespace regime {

/// Calendar date without timezone, ordered by day count.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    constexpr Date(int year, unsigned month, unsigned day)
        : days_(std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}) {}

    /// Strict ISO-8601 `YYYY-MM-DD`.
    static Date parse(std::string_view text) {
        auto fail = [&] { return data_error("UnparsableDate", "cannot parse date '" + std::string(text) + "'"); };
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
        int y = 0;
        unsigned m = 0;
        unsigned d = 0;
        auto num = [&](std::size_t pos, std::size_t len, auto& out) {
            auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
            if (ec != std::errc{} || ptr != text.data() + pos + len) throw fail();
        };
        num(0, 4, y);
        num(5, 2, m);
        num(8, 2, d);
        std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (!ymd.ok()) throw fail();
        return Date(std::chrono::sys_days{ymd});
    }

    std::string to_string() const {
        std::chrono::year_month_day ymd{days_};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    constexpr std::chrono::sys_days days() const { return days_; }
    constexpr Date next_day() const { return Date(days_ + std::chrono::days{1}); }
    /// 0 = Monday ... 6 = Sunday.
    unsigned iso_weekday_index() const { return std::chrono::weekday{days_}.iso_encoding() - 1; }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

}  // namespace regime
