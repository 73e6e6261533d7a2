#include <fdakit/dataio.hpp>
#include <fdakit/random.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace fdakit {

namespace {

const std::vector<std::string> kBidColumns{"auction_id", "time_days", "amount"};
const std::vector<std::string> kAttributeColumns{"auction_id", "duration_days", "opening_bid", "seller_rating"};
const char* const kWeekdays[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (const char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

bool parse_double(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc() && ptr == last && std::isfinite(value);
}

struct CsvLine {
    std::size_t number = 0;
    std::vector<std::string> fields;
};

/// Reads all non-blank lines (CRLF tolerated); line numbers are 1-based.
std::vector<CsvLine> read_lines(std::istream& in) {
    std::vector<CsvLine> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out.push_back({number, split(line)});
    }
    return out;
}

void check_width(const CsvLine& line, const std::vector<std::string>& columns) {
    if (line.fields.size() < columns.size()) {
        throw ParseError(line.number, columns[line.fields.size()], "missing field");
    }
    if (line.fields.size() > columns.size()) throw ParseError(line.number, columns.back(), "too many fields");
}

double number_field(const CsvLine& line, std::size_t index, const std::string& column) {
    double value = 0.0;
    if (!parse_double(line.fields[index], value)) {
        throw ParseError(line.number, column, "expected a number, got \"" + line.fields[index] + "\"");
    }
    return value;
}

}  // namespace

std::string format_number(double value) {
    if (value == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::size_t Dataset::n_bids() const {
    std::size_t n = 0;
    for (const auto& s : series) n += s.events.size();
    return n;
}

AttributeTable Dataset::attribute_table() const {
    AttributeTable table;
    NumericColumn duration{"duration_days", {}}, opening{"opening_bid", {}}, rating{"seller_rating", {}};
    for (const auto& a : auctions) {
        table.ids.push_back(a.auction_id);
        duration.values.push_back(a.duration_days);
        opening.values.push_back(a.opening_bid);
        rating.values.push_back(a.seller_rating);
    }
    table.numeric = {duration, opening, rating};
    for (std::size_t c = 0; c < extra_columns.size(); ++c) {
        if (extra_columns[c].kind == ColumnKind::numeric) {
            NumericColumn col{extra_columns[c].name, {}};
            for (const auto& a : auctions) {
                double v = 0.0;
                parse_double(a.extra[c], v);
                col.values.push_back(v);
            }
            table.numeric.push_back(std::move(col));
        } else {
            CategoricalColumn col{extra_columns[c].name, {}};
            for (const auto& a : auctions) col.values.push_back(a.extra[c]);
            table.categorical.push_back(std::move(col));
        }
    }
    return table;
}

Dataset parse_dataset(std::istream& bids, std::istream& attributes) {
    Dataset out;

    // attributes
    const auto attr_lines = read_lines(attributes);
    if (attr_lines.empty()) throw ParseError(1, "header", "attributes file is empty");
    const auto& attr_header = attr_lines.front();
    for (std::size_t c = 0; c < kAttributeColumns.size(); ++c) {
        if (c >= attr_header.fields.size() || attr_header.fields[c] != kAttributeColumns[c]) {
            throw ParseError(attr_header.number, kAttributeColumns[c],
                             std::string("attributes header must start with ") + kAttributesBaseHeader);
        }
    }
    const std::vector<std::string> attr_columns = attr_header.fields;
    for (std::size_t c = kAttributeColumns.size(); c < attr_columns.size(); ++c) {
        if (attr_columns[c].empty()) throw ParseError(attr_header.number, "header", "empty column name");
        out.extra_columns.push_back({attr_columns[c], ColumnKind::numeric});
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t r = 1; r < attr_lines.size(); ++r) {
        const auto& line = attr_lines[r];
        check_width(line, attr_columns);
        AuctionAttributes a;
        a.auction_id = line.fields[0];
        if (a.auction_id.empty()) throw ParseError(line.number, "auction_id", "empty auction id");
        a.duration_days = number_field(line, 1, "duration_days");
        a.opening_bid = number_field(line, 2, "opening_bid");
        a.seller_rating = number_field(line, 3, "seller_rating");
        if (!(a.duration_days > 0.0)) {
            throw RangeError("line " + std::to_string(line.number) + ": duration_days must be positive");
        }
        if (!(a.opening_bid > 0.0)) {
            throw RangeError("line " + std::to_string(line.number) + ": opening_bid must be positive");
        }
        a.extra.assign(line.fields.begin() + static_cast<long>(kAttributeColumns.size()), line.fields.end());
        if (!index.emplace(a.auction_id, out.auctions.size()).second) {
            throw IntegrityError("duplicate auction_id '" + a.auction_id + "' at line " + std::to_string(line.number));
        }
        out.auctions.push_back(std::move(a));
    }
    for (std::size_t c = 0; c < out.extra_columns.size(); ++c) {
        bool numeric = !out.auctions.empty();
        for (const auto& a : out.auctions) {
            double v = 0.0;
            numeric = numeric && parse_double(a.extra[c], v);
        }
        out.extra_columns[c].kind = numeric ? ColumnKind::numeric : ColumnKind::categorical;
        if (numeric) {
            for (auto& a : out.auctions) {
                double v = 0.0;
                parse_double(a.extra[c], v);
                a.extra[c] = format_number(v);
            }
        }
    }

    // bids
    std::vector<EventSeries> series(out.auctions.size());
    for (std::size_t i = 0; i < out.auctions.size(); ++i) {
        series[i] = {out.auctions[i].auction_id, {}, out.auctions[i].duration_days};
    }
    const auto bid_lines = read_lines(bids);
    if (bid_lines.empty()) throw ParseError(1, "header", "bids file is empty");
    if (bid_lines.front().fields != kBidColumns) {
        throw ParseError(bid_lines.front().number, "header", std::string("bids header must be ") + kBidsHeader);
    }
    for (std::size_t r = 1; r < bid_lines.size(); ++r) {
        const auto& line = bid_lines[r];
        check_width(line, kBidColumns);
        const double time = number_field(line, 1, "time_days");
        const double amount = number_field(line, 2, "amount");
        const auto it = index.find(line.fields[0]);
        if (it == index.end()) {
            throw IntegrityError("line " + std::to_string(line.number) + ": bid references unknown auction_id '" +
                                 line.fields[0] + "'");
        }
        auto& s = series[it->second];
        if (time < 0.0 || time > s.duration) {
            throw RangeError("line " + std::to_string(line.number) + ": time_days " + line.fields[1] +
                             " outside [0, " + format_number(s.duration) + "]");
        }
        if (!(amount > 0.0)) throw RangeError("line " + std::to_string(line.number) + ": amount must be positive");
        s.events.push_back({time, amount});
    }

    // canonical order: auction id, then (time, amount)
    std::vector<std::size_t> order(out.auctions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return out.auctions[a].auction_id < out.auctions[b].auction_id; });
    Dataset sorted{out.extra_columns, {}, {}};
    for (const auto i : order) {
        auto& s = series[i];
        std::stable_sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) {
            return a.time < b.time || (a.time == b.time && a.value < b.value);
        });
        sorted.auctions.push_back(std::move(out.auctions[i]));
        sorted.series.push_back(std::move(s));
    }
    return sorted;
}

Dataset read_dataset(const std::filesystem::path& bids, const std::filesystem::path& attributes) {
    std::ifstream bid_in(bids);
    if (!bid_in) throw IntegrityError("cannot open bids file " + bids.string());
    std::ifstream attr_in(attributes);
    if (!attr_in) throw IntegrityError("cannot open attributes file " + attributes.string());
    return parse_dataset(bid_in, attr_in);
}

void write_bids(std::ostream& out, const Dataset& dataset) {
    out << kBidsHeader << '\n';
    for (const auto& s : dataset.series) {
        for (const auto& e : s.events) {
            out << s.record_id << ',' << format_number(e.time) << ',' << format_number(e.value) << '\n';
        }
    }
}

void write_attributes(std::ostream& out, const Dataset& dataset) {
    out << kAttributesBaseHeader;
    for (const auto& c : dataset.extra_columns) out << ',' << c.name;
    out << '\n';
    for (const auto& a : dataset.auctions) {
        out << a.auction_id << ',' << format_number(a.duration_days) << ',' << format_number(a.opening_bid) << ','
            << format_number(a.seller_rating);
        for (const auto& v : a.extra) out << ',' << v;
        out << '\n';
    }
}

void write_dataset(const std::filesystem::path& bids, const std::filesystem::path& attributes, const Dataset& dataset) {
    std::ofstream bid_out(bids, std::ios::binary);
    std::ofstream attr_out(attributes, std::ios::binary);
    if (!bid_out || !attr_out) throw IntegrityError("cannot write dataset files");
    write_bids(bid_out, dataset);
    write_attributes(attr_out, dataset);
}

EventSeries live_price(const EventSeries& bids, double opening_bid) {
    if (!(opening_bid > 0.0)) throw ParameterError("opening bid must be positive");
    EventSeries out{bids.record_id, {{0.0, opening_bid}}, bids.duration};
    double current = opening_bid;
    for (const auto& e : bids.events) {
        if (e.value > current) {
            current = e.value;
            out.events.push_back({e.time, current});
        }
    }
    return out;
}

Dataset align_dataset(const Dataset& dataset, ClockKind kind) {
    Clock clock = Clock::linear();
    if (kind == ClockKind::activity) {
        std::vector<double> pooled;
        for (const auto& s : dataset.series) {
            for (const auto& e : s.events) pooled.push_back(e.time / s.duration);
        }
        clock = Clock::activity(pooled);
    }
    Dataset out{dataset.extra_columns, dataset.auctions, {}};
    for (const auto& s : dataset.series) out.series.push_back(time_rescale(s, clock));
    return out;
}

// ---------------------------------------------------------------------------
// Synthesis

void SynthConfig::validate() const {
    auto fail = [](const std::string& what) { throw ParameterError("invalid synthesis config: " + what); };
    if (n_auctions < 0) fail("n_auctions must be non-negative");
    if (!(duration_days > 0.0)) fail("duration_days must be positive");
    if (!(base_rate >= 0.0)) fail("base_rate must be non-negative");
    if (!(end_exponent >= 0.0)) fail("end_exponent must be non-negative");
    if (!(end_multiplier >= 0.0)) fail("end_multiplier must be non-negative");
    if (!(value_sdlog >= 0.0)) fail("value_sdlog must be non-negative");
    if (!(increment_fraction > 0.0)) fail("increment_fraction must be positive");
    if (!(price_cap_factor > 1.0)) fail("price_cap_factor must exceed 1");
    if (!(rating_sdlog >= 0.0)) fail("rating_sdlog must be non-negative");
    if (!std::isfinite(value_meanlog) || !std::isfinite(rating_meanlog)) fail("log-scale means must be finite");
}

double expected_bid_count(const SynthConfig& config) {
    return config.base_rate * config.duration_days * (1.0 + config.end_multiplier / (config.end_exponent + 1.0));
}

namespace {

double round_cents(double x) { return std::round(x * 100.0) / 100.0; }

std::string auction_name(int index, int count) {
    const int width = std::max(4, static_cast<int>(std::to_string(std::max(count - 1, 0)).size()));
    std::string digits = std::to_string(index);
    while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
    return "A" + digits;
}

}  // namespace

Dataset synth_dataset(const SynthConfig& config) {
    config.validate();
    Dataset out;
    out.extra_columns = {{"end_day", ColumnKind::categorical}};
    const double horizon = config.duration_days;
    const double peak_rate = config.base_rate * (1.0 + config.end_multiplier);

    for (int i = 0; i < config.n_auctions; ++i) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
        const double value = std::exp(rng.normal(config.value_meanlog, config.value_sdlog));
        const double opening = std::max(round_cents(rng.uniform(0.0, value / 2.0)), 0.01);
        const double rating = std::round(std::exp(rng.normal(config.rating_meanlog, config.rating_sdlog)));
        const char* end_day = kWeekdays[rng.index(7)];

        AuctionAttributes attrs{auction_name(i, config.n_auctions), horizon, opening, rating, {end_day}};
        EventSeries series{attrs.auction_id, {}, horizon};

        if (peak_rate > 0.0) {
            const double cap = config.price_cap_factor * value;
            double current = opening;
            double t = 0.0;
            while (true) {
                t += rng.exponential(1.0 / peak_rate);
                if (t >= horizon) break;
                const double rate = config.base_rate * (1.0 + config.end_multiplier * std::pow(t / horizon, config.end_exponent));
                if (rng.uniform() * peak_rate >= rate) continue;
                const double increment = rng.exponential(config.increment_fraction * value);
                double amount = round_cents(current + std::min(increment, 0.5 * (cap - current)));
                if (amount <= current) amount = round_cents(current + 0.01);
                current = amount;
                series.events.push_back({t, amount});
            }
        }
        out.auctions.push_back(std::move(attrs));
        out.series.push_back(std::move(series));
    }
    return out;
}

}  // namespace fdakit
