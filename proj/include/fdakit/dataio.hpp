#pragma once

// Bid-history and attribute files, price-evolution series, domain alignment
// and seeded synthesis of auction datasets.

#include <fdakit/fdcore.hpp>
#include <fdakit/smooth.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fdakit {

enum class ColumnKind { numeric, categorical };

struct ExtraColumn {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

struct AuctionAttributes {
    std::string auction_id;
    double duration_days = 7.0;
    double opening_bid = 0.0;
    double seller_rating = 0.0;
    std::vector<std::string> extra;  ///< canonical text, aligned with Dataset::extra_columns
};

/**
 * Joined bid histories and attributes. `auctions` and `series` are aligned
 * and sorted by auction id; each series holds (time in days, bid amount).
 */
struct Dataset {
    std::vector<ExtraColumn> extra_columns;
    std::vector<AuctionAttributes> auctions;
    std::vector<EventSeries> series;

    std::size_t size() const noexcept { return auctions.size(); }
    std::size_t n_bids() const;
    /// Numeric columns: duration_days, opening_bid, seller_rating and numeric extras.
    AttributeTable attribute_table() const;
};

inline constexpr const char* kBidsHeader = "auction_id,time_days,amount";
inline constexpr const char* kAttributesBaseHeader = "auction_id,duration_days,opening_bid,seller_rating";

Dataset parse_dataset(std::istream& bids, std::istream& attributes);
Dataset read_dataset(const std::filesystem::path& bids, const std::filesystem::path& attributes);

void write_bids(std::ostream& out, const Dataset& dataset);
void write_attributes(std::ostream& out, const Dataset& dataset);
void write_dataset(const std::filesystem::path& bids, const std::filesystem::path& attributes, const Dataset& dataset);

/// Up to 12 significant digits, no trailing zeros, "-0" rendered as "0".
std::string format_number(double value);

/// Step-valued running maximum of the bids floored at the opening bid, starting with (0, opening_bid).
EventSeries live_price(const EventSeries& bids, double opening_bid);

/// Rescales every series onto [0, 1]; the activity clock pools all normalized event times.
Dataset align_dataset(const Dataset& dataset, ClockKind clock);

/**
 * Synthetic auctions. Bid times follow a nonhomogeneous Poisson process with
 * intensity base_rate * (1 + end_multiplier * (t / T)^end_exponent).
 */
struct SynthConfig {
    int n_auctions = 200;
    double duration_days = 7.0;
    double base_rate = 1.0;          ///< bids per day
    double end_exponent = 8.0;
    double end_multiplier = 20.0;
    double value_meanlog = 4.6;      ///< log item value ~ N(meanlog, sdlog^2)
    double value_sdlog = 0.4;
    double increment_fraction = 0.05;  ///< mean bid increment as a fraction of the item value
    double price_cap_factor = 1.25;    ///< bids approach but never exceed factor * value
    double rating_meanlog = 4.0;     ///< seller rating = round(exp(N(meanlog, sdlog^2)))
    double rating_sdlog = 1.5;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Integral of the intensity over one auction.
double expected_bid_count(const SynthConfig& config);

Dataset synth_dataset(const SynthConfig& config);

}  // namespace fdakit
