#include "alphasharpe/data.hpp"
#include "alphasharpe/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace alphasharpe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool looks_like_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

double parse_price(const std::string& cell, std::size_t row, const std::string& origin) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw InputError(origin + ": row " + std::to_string(row) + ": unparseable number '" + cell + "'");
    if (!(v > 0.0))
        throw ValidationError(origin + ": row " + std::to_string(row) + ": non-positive price " + cell);
    return v;
}

std::string require_date(const std::string& cell, std::size_t row, const std::string& origin) {
    if (!looks_like_iso_date(cell))
        throw InputError(origin + ": row " + std::to_string(row) + ": unparseable date '" + cell + "'");
    return cell;
}

void format_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

} // namespace

PriceTable parse_price_csv(std::istream& in, CsvLayout layout, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line))
        throw InputError(origin + ": empty file");
    auto header = split_csv_line(line);

    // (date, asset) -> price; assets keep first-seen order
    std::map<std::string, std::map<int, double>> by_date;
    std::vector<std::string> assets;
    std::map<std::string, int> asset_index;
    auto asset_id = [&](const std::string& name) {
        auto it = asset_index.find(name);
        if (it != asset_index.end()) return it->second;
        int id = static_cast<int>(assets.size());
        assets.push_back(name);
        asset_index.emplace(name, id);
        return id;
    };

    std::size_t row = 1;
    if (layout == CsvLayout::Wide) {
        if (header.size() < 2)
            throw InputError(origin + ": wide layout needs a date column plus at least one asset column");
        for (std::size_t c = 1; c < header.size(); ++c) asset_id(header[c]);
        if (asset_index.size() != header.size() - 1)
            throw ValidationError(origin + ": duplicate asset column in header");
        while (std::getline(in, line)) {
            ++row;
            if (line.empty()) continue;
            auto cells = split_csv_line(line);
            if (cells.size() != header.size())
                throw InputError(origin + ": row " + std::to_string(row) + ": expected " +
                                 std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
            auto date = require_date(cells[0], row, origin);
            auto& slot = by_date[date];
            for (std::size_t c = 1; c < cells.size(); ++c) {
                if (cells[c].empty()) continue;
                int id = static_cast<int>(c) - 1;
                if (slot.count(id))
                    throw ValidationError(origin + ": duplicate cell for (" + date + "," + assets[id] + ")");
                slot[id] = parse_price(cells[c], row, origin);
            }
        }
    } else {
        if (header.size() != 3)
            throw InputError(origin + ": long layout needs exactly columns date,asset,price");
        while (std::getline(in, line)) {
            ++row;
            if (line.empty()) continue;
            auto cells = split_csv_line(line);
            if (cells.size() != 3)
                throw InputError(origin + ": row " + std::to_string(row) + ": expected 3 cells");
            auto date = require_date(cells[0], row, origin);
            int id = asset_id(cells[1]);
            auto& slot = by_date[date];
            if (slot.count(id))
                throw ValidationError(origin + ": duplicate cell for (" + date + "," + cells[1] + ")");
            slot[id] = parse_price(cells[2], row, origin);
        }
    }

    if (by_date.empty())
        throw InputError(origin + ": no data rows");

    PriceTable table;
    table.assets = assets;
    table.timestamps.reserve(by_date.size());
    table.prices = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(by_date.size()),
                                             static_cast<Eigen::Index>(assets.size()), kNaN);
    Eigen::Index t = 0;
    for (const auto& [date, cells] : by_date) { // std::map iterates dates in order
        table.timestamps.push_back(date);
        for (const auto& [id, price] : cells) table.prices(t, id) = price;
        ++t;
    }
    return table;
}

PriceTable load_price_csv(const std::string& path, CsvLayout layout) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open '" + path + "'");
    return parse_price_csv(in, layout, path);
}

ReturnMatrix to_log_returns(const PriceTable& p) {
    const int T = p.n_periods();
    const int N = p.n_assets();
    if (T < 2)
        throw SizeError("need at least 2 price rows to form returns, got " + std::to_string(T));
    ReturnMatrix r;
    r.assets = p.assets;
    r.timestamps.assign(p.timestamps.begin() + 1, p.timestamps.end());
    r.returns.resize(T - 1, N);
    for (int t = 0; t + 1 < T; ++t)
        for (int i = 0; i < N; ++i) {
            double a = p.prices(t, i), b = p.prices(t + 1, i);
            r.returns(t, i) = (std::isnan(a) || std::isnan(b)) ? kNaN : std::log(b / a);
        }
    return r;
}

ReturnMatrix clean(const ReturnMatrix& r, double max_missing_frac) {
    if (max_missing_frac < 0.0 || max_missing_frac > 1.0)
        throw ConfigError("missing-fraction threshold must lie in [0,1]");
    const int T = r.n_periods();
    const int N = r.n_assets();
    std::vector<int> keep;
    for (int i = 0; i < N; ++i) {
        int missing = 0;
        for (int t = 0; t < T; ++t)
            if (!std::isfinite(r.returns(t, i))) ++missing;
        if (T == 0 || static_cast<double>(missing) / T <= max_missing_frac) keep.push_back(i);
    }
    if (keep.empty())
        throw EmptyUniverseError("every asset exceeds the missing-data threshold");
    ReturnMatrix out;
    out.timestamps = r.timestamps;
    out.frequency = r.frequency;
    out.returns.resize(T, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.assets.push_back(r.assets[keep[k]]);
        for (int t = 0; t < T; ++t) {
            double v = r.returns(t, keep[k]);
            out.returns(t, static_cast<Eigen::Index>(k)) = std::isfinite(v) ? v : 0.0;
        }
    }
    return out;
}

FoldSet split_time_series(int n_periods, double holdout_frac, int n_folds,
                          int train_len, int future_len, int stride) {
    if (holdout_frac < 0.0 || holdout_frac >= 1.0)
        throw ConfigError("holdout fraction must lie in [0,1)");
    if (stride < 1)
        throw ConfigError("stride must be >= 1");
    if (n_folds < 1)
        throw ConfigError("need at least one fold");
    if (train_len < 1 || future_len < 1)
        throw ConfigError("train and future lengths must be >= 1");

    const int holdout_len = static_cast<int>(std::ceil(holdout_frac * n_periods));
    const int usable = n_periods - holdout_len;
    const int required = (n_folds - 1) * stride + train_len + future_len;
    if (required > usable)
        throw SizeError("insufficient history: " + std::to_string(n_folds) + " folds need " +
                        std::to_string(required) + " periods, only " + std::to_string(usable) +
                        " available before the holdout");

    FoldSet fs;
    for (int k = 0; k < n_folds; ++k) {
        int start = k * stride;
        fs.folds.push_back({{start, start + train_len},
                            {start + train_len, start + train_len + future_len}});
    }
    if (holdout_len > 0) fs.holdout = Range{usable, n_periods};
    return fs;
}

ReturnMatrix slice_rows(const ReturnMatrix& r, Range range) {
    if (range.begin < 0 || range.end > r.n_periods() || range.begin >= range.end)
        throw SizeError("row slice out of bounds");
    ReturnMatrix out;
    out.assets = r.assets;
    out.frequency = r.frequency;
    out.timestamps.assign(r.timestamps.begin() + range.begin, r.timestamps.begin() + range.end);
    out.returns = r.returns.middleRows(range.begin, range.length());
    return out;
}

ReturnMatrix generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_assets < 1 || spec.n_periods < 1)
        throw ConfigError("synthetic spec needs positive asset and period counts");
    if (!(spec.tail_df > 2.0))
        throw ConfigError("tail_df must exceed 2 for finite variance");
    int total = 0;
    for (const auto& reg : spec.regimes) {
        if (reg.duration < 0 || reg.drift_dispersion < 0 || reg.vol_dispersion < 0)
            throw ConfigError("regime durations and dispersions must be nonnegative");
        total += reg.duration;
    }
    if (total != spec.n_periods)
        throw ConfigError("regime durations sum to " + std::to_string(total) + ", expected " +
                          std::to_string(spec.n_periods));

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::student_t_distribution<double> tdist(spec.tail_df);
    const double unit_scale = std::sqrt((spec.tail_df - 2.0) / spec.tail_df); // unit-variance t-noise

    ReturnMatrix r;
    r.returns.resize(spec.n_periods, spec.n_assets);
    for (int i = 0; i < spec.n_assets; ++i)
        r.assets.push_back("asset_" + std::to_string(i + 1));
    for (int t = 0; t < spec.n_periods; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "t%06d", t);
        r.timestamps.emplace_back(buf);
    }

    int t0 = 0;
    for (const auto& reg : spec.regimes) {
        std::vector<double> drift(spec.n_assets), vol(spec.n_assets);
        for (int i = 0; i < spec.n_assets; ++i) {
            drift[i] = reg.drift_mean + reg.drift_dispersion * gauss(rng);
            vol[i] = std::max(0.0, reg.vol_mean + reg.vol_dispersion * gauss(rng));
        }
        for (int t = t0; t < t0 + reg.duration; ++t)
            for (int i = 0; i < spec.n_assets; ++i)
                r.returns(t, i) = drift[i] + vol[i] * unit_scale * tdist(rng);
        t0 += reg.duration;
    }
    return r;
}

SyntheticSpec default_synthetic_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_assets = 100;
    spec.n_periods = 1500;
    spec.tail_df = 5.0;
    spec.seed = seed;
    spec.regimes = {
        {800, 0.0004, 0.0004, 0.010, 0.004}, // calm
        {200, -0.0020, 0.0010, 0.030, 0.010}, // stress
        {500, 0.0008, 0.0005, 0.015, 0.005}, // recovery
    };
    return spec;
}

SyntheticSpec parse_synthetic_spec_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad synthetic spec JSON: ") + e.what());
    }
    try {
        SyntheticSpec spec;
        spec.n_assets = j.at("n_assets").get<int>();
        spec.n_periods = j.at("n_periods").get<int>();
        spec.tail_df = j.value("tail_df", 5.0);
        spec.seed = j.value("seed", std::uint64_t{0});
        for (const auto& reg : j.at("regimes")) {
            RegimeSpec rs;
            rs.duration = reg.at("duration").get<int>();
            rs.drift_mean = reg.value("drift_mean", 0.0);
            rs.drift_dispersion = reg.value("drift_dispersion", 0.0);
            rs.vol_mean = reg.value("vol_mean", 0.0);
            rs.vol_dispersion = reg.value("vol_dispersion", 0.0);
            spec.regimes.push_back(rs);
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad synthetic spec JSON: ") + e.what());
    }
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
    nlohmann::json j;
    j["n_assets"] = spec.n_assets;
    j["n_periods"] = spec.n_periods;
    j["tail_df"] = spec.tail_df;
    j["seed"] = spec.seed;
    j["regimes"] = nlohmann::json::array();
    for (const auto& reg : spec.regimes)
        j["regimes"].push_back({{"duration", reg.duration},
                                {"drift_mean", reg.drift_mean},
                                {"drift_dispersion", reg.drift_dispersion},
                                {"vol_mean", reg.vol_mean},
                                {"vol_dispersion", reg.vol_dispersion}});
    return j.dump(2);
}

void write_returns_csv(const ReturnMatrix& r, std::ostream& out) {
    std::string line = "date";
    for (const auto& a : r.assets) {
        line += ',';
        line += a;
    }
    line += '\n';
    out << line;
    for (int t = 0; t < r.n_periods(); ++t) {
        line = r.timestamps[t];
        for (int i = 0; i < r.n_assets(); ++i) {
            line += ',';
            format_double(line, r.returns(t, i));
        }
        line += '\n';
        out << line;
    }
}

void save_returns_csv(const ReturnMatrix& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write '" + path + "'");
    write_returns_csv(r, out);
}

ReturnMatrix load_returns_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw InputError(path + ": empty file");
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "date")
        throw InputError(path + ": expected header date,<asset...>");
    ReturnMatrix r;
    r.assets.assign(header.begin() + 1, header.end());
    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw InputError(path + ": row " + std::to_string(row) + ": wrong cell count");
        r.timestamps.push_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
            if (ec != std::errc() || ptr != cells[c].data() + cells[c].size())
                throw InputError(path + ": row " + std::to_string(row) + ": unparseable number '" + cells[c] + "'");
            values.push_back(v);
        }
    }
    r.returns.resize(static_cast<Eigen::Index>(r.timestamps.size()),
                     static_cast<Eigen::Index>(r.assets.size()));
    for (Eigen::Index t = 0; t < r.returns.rows(); ++t)
        for (Eigen::Index i = 0; i < r.returns.cols(); ++i)
            r.returns(t, i) = values[static_cast<std::size_t>(t) * r.assets.size() + i];
    return r;
}

namespace {

constexpr char kCacheMagic[5] = {'A', 'S', 'R', 'M', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw InputError(path + ": truncated cache file");
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const std::string& path) {
    auto len = get<std::uint32_t>(in, path);
    std::string s(len, '\0');
    if (!in.read(s.data(), len))
        throw InputError(path + ": truncated cache file");
    return s;
}

} // namespace

void save_returns_cache(const ReturnMatrix& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write '" + path + "'");
    out.write(kCacheMagic, sizeof(kCacheMagic));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(r.n_periods()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(r.n_assets()));
    put<double>(out, r.frequency);
    for (const auto& ts : r.timestamps) put_string(out, ts);
    for (const auto& a : r.assets) put_string(out, a);
    for (int t = 0; t < r.n_periods(); ++t)
        for (int i = 0; i < r.n_assets(); ++i) put<double>(out, r.returns(t, i));
}

ReturnMatrix load_returns_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open '" + path + "'");
    char magic[5];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
        throw InputError(path + ": not an ASRM1 returns cache");
    ReturnMatrix r;
    auto T = get<std::uint64_t>(in, path);
    auto N = get<std::uint64_t>(in, path);
    r.frequency = get<double>(in, path);
    for (std::uint64_t t = 0; t < T; ++t) r.timestamps.push_back(get_string(in, path));
    for (std::uint64_t i = 0; i < N; ++i) r.assets.push_back(get_string(in, path));
    r.returns.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(N));
    for (std::uint64_t t = 0; t < T; ++t)
        for (std::uint64_t i = 0; i < N; ++i)
            r.returns(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = get<double>(in, path);
    return r;
}

} // namespace alphasharpe
