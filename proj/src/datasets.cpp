#include "datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace adaf2m2 {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int32_t day_of(std::int64_t ts) { return static_cast<std::int32_t>(ts / kSecondsPerDay); }

} // namespace

Dataset::Dataset(FeatureSchema schema, std::string name)
    : schema_(std::move(schema)), name_(std::move(name)) {
    columns_.resize(static_cast<std::size_t>(schema_.size()));
    for (int f = 0; f < schema_.size(); ++f) {
        columns_[f].is_sequence = schema_.at(f).is_sequence;
        if (columns_[f].is_sequence) columns_[f].offsets.push_back(0);
    }
    for (const int i : schema_.state_id_indices()) {
        const FeatureKind k = schema_.at(i).kind;
        if (k == FeatureKind::User && user_key_feature_ < 0) user_key_feature_ = i;
        if (k == FeatureKind::Item && item_key_feature_ < 0) item_key_feature_ = i;
    }
}

void Dataset::add_sample(FeatureValues values, int label, std::int64_t timestamp) {
    if (static_cast<int>(values.size()) != schema_.size())
        throw ShapeError("add_sample got " + std::to_string(values.size()) +
                         " feature slots, schema has " + std::to_string(schema_.size()));
    if (label != 0 && label != 1)
        throw NumericError("labels must be 0 or 1, got " + std::to_string(label));
    for (int f = 0; f < schema_.size(); ++f) {
        Column& col = columns_[f];
        if (col.is_sequence) {
            col.values.insert(col.values.end(), values[f].begin(), values[f].end());
            col.offsets.push_back(static_cast<std::uint32_t>(col.values.size()));
        } else {
            if (values[f].size() != 1)
                throw ShapeError("scalar feature '" + schema_.at(f).name +
                                 "' needs exactly one value, got " + std::to_string(values[f].size()));
            col.values.push_back(values[f][0]);
        }
    }
    labels_.push_back(label);
    user_keys_.push_back(user_key_feature_ >= 0 ? values[user_key_feature_][0] : -1);
    item_keys_.push_back(item_key_feature_ >= 0 ? values[item_key_feature_][0] : -1);
    timestamps_.push_back(timestamp);
    if (timestamp < 0) has_timestamps_ = false;
}

FeatureValues Dataset::Cursor::at(std::size_t i) {
    if (i >= ds_->size())
        throw ShapeError("sample index " + std::to_string(i) + " out of range for " +
                         std::to_string(ds_->size()) + " samples");
    for (std::size_t f = 0; f < ds_->columns_.size(); ++f) {
        const Column& col = ds_->columns_[f];
        if (col.is_sequence) {
            const std::uint32_t lo = col.offsets[i];
            const std::uint32_t hi = col.offsets[i + 1];
            slots_[f] = std::span<const std::int32_t>(col.values.data() + lo, hi - lo);
        } else {
            slots_[f] = std::span<const std::int32_t>(col.values.data() + i, 1);
        }
    }
    return slots_;
}

void Dataset::copy_sample_from(const Dataset& other, std::size_t i) {
    if (schema_.fingerprint() != other.schema_.fingerprint())
        throw ShapeError("cannot copy samples across different schemas");
    Cursor cur(other);
    add_sample(cur.at(i), other.labels_[i], other.timestamps_[i]);
}

std::array<Dataset, 3> Dataset::split_random(double train, double val, double test,
                                             std::uint64_t seed) const {
    if (!(train > 0.0 && val > 0.0 && test > 0.0))
        throw ConfigError("split ratios must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1, got " + std::to_string(train + val + test));
    const std::size_t n = size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(Rng::derive(seed, "dataset.split"));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.uniform_int(i);
        std::swap(order[i - 1], order[j]);
    }
    const std::size_t n_train = static_cast<std::size_t>(std::llround(train * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(std::llround(val * static_cast<double>(n)));

    std::array<Dataset, 3> out = {Dataset(schema_, name_ + ".train"),
                                  Dataset(schema_, name_ + ".val"),
                                  Dataset(schema_, name_ + ".test")};
    for (std::size_t k = 0; k < n; ++k) {
        Dataset& dst = k < n_train ? out[0] : (k < n_train + n_val ? out[1] : out[2]);
        dst.copy_sample_from(*this, order[k]);
    }
    return out;
}

void Dataset::save_tsv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "#schema\t" << schema_.to_json_text(-1) << '\n';
    f << "#columns\tlabel\ttimestamp";
    for (int i = 0; i < schema_.size(); ++i) f << '\t' << schema_.at(i).name;
    f << '\n';
    Cursor cur(*this);
    for (std::size_t i = 0; i < size(); ++i) {
        f << labels_[i] << '\t' << timestamps_[i];
        const FeatureValues v = cur.at(i);
        for (std::size_t s = 0; s < v.size(); ++s) {
            f << '\t';
            if (v[s].empty()) {
                f << '-';
            } else {
                for (std::size_t k = 0; k < v[s].size(); ++k) {
                    if (k) f << ',';
                    f << v[s][k];
                }
            }
        }
        f << '\n';
    }
    if (!f) throw IoError("failed while writing '" + path + "'");
}

Dataset Dataset::load_tsv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line) || line.rfind("#schema\t", 0) != 0)
        throw IoError("'" + path + "' does not start with a #schema header");
    Dataset ds(FeatureSchema::from_json_text(line.substr(8)), path);
    if (!std::getline(f, line) || line.rfind("#columns\t", 0) != 0)
        throw IoError("'" + path + "' is missing the #columns header");

    std::vector<std::vector<std::int32_t>> cols(static_cast<std::size_t>(ds.schema_.size()));
    std::vector<std::span<const std::int32_t>> view(cols.size());
    std::size_t line_no = 2;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        auto next_cell = [&](const char* what) {
            if (!std::getline(ss, cell, '\t'))
                throw IoError(path + ":" + std::to_string(line_no) + ": missing " + what);
        };
        next_cell("label");
        const int label = std::stoi(cell);
        next_cell("timestamp");
        const std::int64_t ts = std::stoll(cell);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            next_cell(ds.schema_.at(static_cast<int>(c)).name.c_str());
            cols[c].clear();
            if (cell != "-") {
                std::istringstream vs(cell);
                std::string tok;
                while (std::getline(vs, tok, ',')) cols[c].push_back(std::stoi(tok));
            }
            view[c] = cols[c];
        }
        ds.add_sample(view, label, ts);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Statistics

EntityStats StatsStore::eval_at(const Entry& e, std::int64_t ref_ts, bool has_ts) {
    EntityStats st;
    st.counts = {e.events};
    if (has_ts) {
        const std::int32_t ref_day = day_of(ref_ts);
        auto in_window = [&](std::int32_t window) {
            const auto lo = std::lower_bound(e.days.begin(), e.days.end(), ref_day - window + 1);
            const auto hi = std::upper_bound(e.days.begin(), e.days.end(), ref_day);
            return static_cast<int>(hi - lo);
        };
        st.active_days_7 = in_window(7);
        st.active_days_30 = in_window(30);
    }
    return st;
}

const EntityStats* StatsStore::user(std::int32_t key) const {
    const auto it = users_.find(key);
    return it == users_.end() ? nullptr : &it->second.snapshot;
}

const EntityStats* StatsStore::item(std::int32_t key) const {
    const auto it = items_.find(key);
    return it == items_.end() ? nullptr : &it->second.snapshot;
}

std::optional<EntityStats> StatsStore::user_at(std::int32_t key, std::int64_t ref_ts) const {
    const auto it = users_.find(key);
    if (it == users_.end()) return std::nullopt;
    return eval_at(it->second, ref_ts, has_timestamps_);
}

std::optional<EntityStats> StatsStore::item_at(std::int32_t key, std::int64_t ref_ts) const {
    const auto it = items_.find(key);
    if (it == items_.end()) return std::nullopt;
    return eval_at(it->second, ref_ts, has_timestamps_);
}

StatsStore build_stats(const Dataset& train) {
    StatsStore store;
    store.has_timestamps_ = train.has_timestamps() && train.size() > 0;
    std::int64_t max_ts = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const std::int64_t ts = train.timestamp(i);
        if (store.has_timestamps_) max_ts = std::max(max_ts, ts);
        for (auto* side : {&store.users_, &store.items_}) {
            const std::int32_t key =
                side == &store.users_ ? train.user_key(i) : train.item_key(i);
            StatsStore::Entry& e = (*side)[key];
            ++e.events;
            if (store.has_timestamps_) e.days.push_back(day_of(ts));
        }
    }
    store.snapshot_ts_ = max_ts;
    for (auto* side : {&store.users_, &store.items_}) {
        for (auto& [key, e] : *side) {
            std::sort(e.days.begin(), e.days.end());
            e.days.erase(std::unique(e.days.begin(), e.days.end()), e.days.end());
            e.snapshot = StatsStore::eval_at(e, max_ts, store.has_timestamps_);
        }
    }
    return store;
}

// ---------------------------------------------------------------------------
// MovieLens-1M

namespace {

std::vector<std::string> split_on(const std::string& line, const std::string& delim) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(delim, pos);
        if (next == std::string::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, next - pos));
        pos = next + delim.size();
    }
}

const std::vector<std::string>& ml_genres() {
    static const std::vector<std::string> g = {
        "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
        "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical",
        "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western"};
    return g;
}

int ml_age_code(int age) {
    switch (age) {
        case 1: return 1;
        case 18: return 2;
        case 25: return 3;
        case 35: return 4;
        case 45: return 5;
        case 50: return 6;
        case 56: return 7;
    }
    return 0;
}

constexpr int kYearBase = 1800;
constexpr int kYearVocab = 212; // 1800..2010 plus the unknown slot

int ml_year_code(const std::string& title) {
    // release year is the trailing "(YYYY)" of the title
    const std::size_t close = title.rfind(')');
    if (close == std::string::npos || close < 4) return 0;
    const std::size_t open = title.rfind('(', close);
    if (open == std::string::npos || close - open != 5) return 0;
    int year = 0;
    for (std::size_t i = open + 1; i < close; ++i) {
        const char c = title[i];
        if (c < '0' || c > '9') return 0;
        year = year * 10 + (c - '0');
    }
    const int idx = year - kYearBase + 1;
    return (idx >= 1 && idx < kYearVocab) ? idx : 0;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    return f;
}

} // namespace

Dataset load_movielens(const std::string& dir) {
    struct UserRow {
        std::int32_t gender = 0, age = 0, occupation = 0;
    };
    struct MovieRow {
        std::int32_t year = 0;
        std::vector<std::int32_t> genres;
    };

    std::unordered_map<std::int32_t, UserRow> users;
    {
        std::ifstream f = open_or_throw(dir + "/users.dat");
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto parts = split_on(line, "::");
            if (parts.size() < 4) throw IoError(dir + "/users.dat: malformed line '" + line + "'");
            UserRow u;
            u.gender = parts[1] == "F" ? 1 : (parts[1] == "M" ? 2 : 0);
            u.age = ml_age_code(std::stoi(parts[2]));
            const int occ = std::stoi(parts[3]);
            u.occupation = (occ >= 0 && occ <= 20) ? occ + 1 : 0;
            users[std::stoi(parts[0])] = u;
        }
    }

    std::unordered_map<std::int32_t, MovieRow> movies;
    {
        std::ifstream f = open_or_throw(dir + "/movies.dat");
        std::string line;
        const auto& genre_names = ml_genres();
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            const auto parts = split_on(line, "::");
            if (parts.size() < 3) throw IoError(dir + "/movies.dat: malformed line '" + line + "'");
            MovieRow m;
            m.year = ml_year_code(parts[1]);
            for (const std::string& g : split_on(parts[2], "|")) {
                const auto it = std::find(genre_names.begin(), genre_names.end(), g);
                m.genres.push_back(
                    it == genre_names.end() ? 0
                                            : static_cast<std::int32_t>(it - genre_names.begin() + 1));
            }
            movies[std::stoi(parts[0])] = std::move(m);
        }
    }

    FeatureSchema schema({
        {"user_id", FeatureKind::User, FeatureClass::IdBased, 6041, false, true},
        {"gender", FeatureKind::User, FeatureClass::Meta, 3, false, false},
        {"age", FeatureKind::User, FeatureClass::Meta, 8, false, false},
        {"occupation", FeatureKind::User, FeatureClass::Meta, 22, false, false},
        {"item_id", FeatureKind::Item, FeatureClass::IdBased, 3953, false, true},
        {"year", FeatureKind::Item, FeatureClass::Meta, kYearVocab, false, false},
        {"genres", FeatureKind::Item, FeatureClass::IdBased, 19, true, false},
    });
    Dataset ds(std::move(schema), "movielens-1m");

    std::ifstream f = open_or_throw(dir + "/ratings.dat");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto parts = split_on(line, "::");
        if (parts.size() != 4)
            throw IoError(dir + "/ratings.dat:" + std::to_string(line_no) + ": malformed line");
        const std::int32_t uid = std::stoi(parts[0]);
        const std::int32_t mid = std::stoi(parts[1]);
        const int rating = std::stoi(parts[2]);
        const std::int64_t ts = std::stoll(parts[3]);
        const auto uit = users.find(uid);
        if (uit == users.end())
            throw IoError(dir + "/ratings.dat:" + std::to_string(line_no) + ": unknown user " +
                          std::to_string(uid));
        const auto mit = movies.find(mid);
        if (mit == movies.end())
            throw IoError(dir + "/ratings.dat:" + std::to_string(line_no) + ": unknown movie " +
                          std::to_string(mid));

        const std::int32_t vals[6] = {uid, uit->second.gender, uit->second.age,
                                      uit->second.occupation, mid, mit->second.year};
        const std::span<const std::int32_t> slots[7] = {
            {&vals[0], 1}, {&vals[1], 1}, {&vals[2], 1}, {&vals[3], 1},
            {&vals[4], 1}, {&vals[5], 1}, mit->second.genres};
        ds.add_sample(slots, rating >= 4 ? 1 : 0, ts);
    }
    if (ds.size() == 0) throw IoError(dir + "/ratings.dat: no samples read");
    return ds;
}

// ---------------------------------------------------------------------------
// Synthetic long-tail universe

void SynthConfig::validate() const {
    if (users < 2 || items < 2)
        throw ConfigError("synthetic universe needs at least 2 users and 2 items");
    if (samples < 1) throw ConfigError("synth.samples must be >= 1");
    if (user_zipf <= 0.0 || item_zipf <= 0.0) throw ConfigError("Zipf exponents must be > 0");
    if (latent_dim < 1) throw ConfigError("synth.latent_dim must be >= 1");
    if (meta_features < 0) throw ConfigError("synth.meta_features must be >= 0");
    if (informativeness < 0.0 || informativeness > 1.0)
        throw ConfigError("synth.informativeness must be in [0, 1]");
    if (label_noise < 0.0 || label_noise > 0.5)
        throw ConfigError("synth.label_noise must be in [0, 0.5]");
    if (cold_user_frac < 0.0 || cold_user_frac > 0.9 || cold_item_frac < 0.0 ||
        cold_item_frac > 0.9)
        throw ConfigError("cold fractions must be in [0, 0.9]");
    if (cold_boost < 0.0 || cold_boost > 1.0)
        throw ConfigError("synth.cold_boost must be in [0, 1]");
}

double SynthTruth::prob(std::int32_t user, std::int32_t item) const {
    double dot = 0.0;
    for (int d = 0; d < user_z.cols(); ++d) dot += user_z.at(user, d) * item_z.at(item, d);
    return Tape::stable_sigmoid(scale * dot);
}

FeatureSchema synth_schema(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<FeatureSpec> feats;
    feats.push_back({"user_id", FeatureKind::User, FeatureClass::IdBased, cfg.users + 1, false, true});
    for (int j = 0; j < cfg.meta_features; ++j)
        feats.push_back({"u_meta_" + std::to_string(j), FeatureKind::User, FeatureClass::Meta, 17,
                         false, false});
    feats.push_back({"item_id", FeatureKind::Item, FeatureClass::IdBased, cfg.items + 1, false, true});
    for (int j = 0; j < cfg.meta_features; ++j)
        feats.push_back({"i_meta_" + std::to_string(j), FeatureKind::Item, FeatureClass::Meta, 17,
                         false, false});
    return FeatureSchema(std::move(feats));
}

namespace {

// Seeded sampler over ranks 1..n with P(r) proportional to r^-s.
class ZipfSampler {
public:
    ZipfSampler(int n, double s) : cum_(static_cast<std::size_t>(n)) {
        double total = 0.0;
        for (int r = 1; r <= n; ++r) {
            total += std::pow(static_cast<double>(r), -s);
            cum_[r - 1] = total;
        }
        total_ = total;
    }

    std::int32_t draw(Rng& rng) const {
        const double u = rng.uniform() * total_;
        const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
        return static_cast<std::int32_t>(it - cum_.begin()) + 1;
    }

private:
    std::vector<double> cum_;
    double total_ = 0.0;
};

double std_normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Quantized noisy projections of an entity's latent vector: one bucketed
// value per meta feature, sharing the projection directions across entities.
std::vector<std::vector<std::int32_t>> make_meta(const Matrix& z, int count, double informativeness,
                                                 Rng& rng) {
    const int entities = z.rows();
    const int dim = z.cols();
    std::vector<std::vector<std::int32_t>> out(static_cast<std::size_t>(entities),
                                               std::vector<std::int32_t>(count));
    std::vector<std::vector<double>> proj(static_cast<std::size_t>(count),
                                          std::vector<double>(dim));
    for (auto& p : proj)
        for (auto& v : p) v = rng.gaussian();
    const double inf = informativeness;
    const double sigma = std::sqrt(inf * inf + (1.0 - inf) * (1.0 - inf));
    for (int e = 1; e < entities; ++e) { // row 0 is the reserved index
        for (int j = 0; j < count; ++j) {
            double dot = 0.0;
            for (int d = 0; d < dim; ++d) dot += z.at(e, d) * proj[j][d];
            const double standardized = dot / std::sqrt(static_cast<double>(dim));
            const double raw = inf * standardized + (1.0 - inf) * rng.gaussian();
            const int bucket =
                std::min(15, static_cast<int>(std_normal_cdf(raw / sigma) * 16.0));
            out[e][j] = static_cast<std::int32_t>(bucket + 1);
        }
    }
    return out;
}

} // namespace

SynthData generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();

    Rng latent_rng(Rng::derive(seed, "synth.latent"));
    SynthTruth truth;
    truth.user_z = Matrix(cfg.users + 1, cfg.latent_dim);
    truth.item_z = Matrix(cfg.items + 1, cfg.latent_dim);
    for (int u = 1; u <= cfg.users; ++u)
        for (int d = 0; d < cfg.latent_dim; ++d) truth.user_z.at(u, d) = latent_rng.gaussian();
    for (int i = 1; i <= cfg.items; ++i)
        for (int d = 0; d < cfg.latent_dim; ++d) truth.item_z.at(i, d) = latent_rng.gaussian();
    truth.scale = 2.5 / std::sqrt(static_cast<double>(cfg.latent_dim));

    const int cold_users = static_cast<int>(std::ceil(cfg.cold_user_frac * cfg.users));
    const int cold_items = static_cast<int>(std::ceil(cfg.cold_item_frac * cfg.items));
    const int warm_users = cfg.users - cold_users;
    const int warm_items = cfg.items - cold_items;
    if (warm_users < 1 || warm_items < 1)
        throw ConfigError("cold fractions leave no warm users or items");
    truth.cold_user.assign(static_cast<std::size_t>(cfg.users) + 1, 0);
    truth.cold_item.assign(static_cast<std::size_t>(cfg.items) + 1, 0);
    for (int u = warm_users + 1; u <= cfg.users; ++u) truth.cold_user[u] = 1;
    for (int i = warm_items + 1; i <= cfg.items; ++i) truth.cold_item[i] = 1;

    Rng meta_rng(Rng::derive(seed, "synth.meta"));
    const auto user_meta = make_meta(truth.user_z, cfg.meta_features, cfg.informativeness, meta_rng);
    const auto item_meta = make_meta(truth.item_z, cfg.meta_features, cfg.informativeness, meta_rng);

    const ZipfSampler user_zipf(warm_users, cfg.user_zipf);
    const ZipfSampler item_zipf(warm_items, cfg.item_zipf);

    const FeatureSchema schema = synth_schema(cfg);
    SynthData data{Dataset(schema, "synth.train"), Dataset(schema, "synth.val"),
                   Dataset(schema, "synth.test"), std::move(truth)};

    Rng draw_rng(Rng::derive(seed, "synth.draw"));
    Rng label_rng(Rng::derive(seed, "synth.label"));
    Rng time_rng(Rng::derive(seed, "synth.time"));
    constexpr std::int64_t kEpochBase = 1600000000;
    constexpr std::int64_t kSpanDays = 60;

    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(cfg.samples)));
    const std::size_t n_val =
        static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(cfg.samples)));

    std::vector<std::int32_t> vals(static_cast<std::size_t>(schema.size()));
    std::vector<std::span<const std::int32_t>> slots(vals.size());
    for (std::size_t f = 0; f < vals.size(); ++f)
        slots[f] = std::span<const std::int32_t>(&vals[f], 1);

    for (std::size_t k = 0; k < static_cast<std::size_t>(cfg.samples); ++k) {
        const bool eval_split = k >= n_train;
        std::int32_t user;
        std::int32_t item;
        if (eval_split && cold_users > 0 && draw_rng.bernoulli(cfg.cold_boost)) {
            user = warm_users + 1 + static_cast<std::int32_t>(draw_rng.uniform_int(cold_users));
        } else {
            user = user_zipf.draw(draw_rng);
        }
        if (eval_split && cold_items > 0 && draw_rng.bernoulli(cfg.cold_boost)) {
            item = warm_items + 1 + static_cast<std::int32_t>(draw_rng.uniform_int(cold_items));
        } else {
            item = item_zipf.draw(draw_rng);
        }

        int label = label_rng.bernoulli(data.truth.prob(user, item)) ? 1 : 0;
        if (cfg.label_noise > 0.0 && label_rng.bernoulli(cfg.label_noise)) label = 1 - label;
        const std::int64_t ts =
            kEpochBase + static_cast<std::int64_t>(time_rng.uniform_int(kSpanDays * kSecondsPerDay));

        std::size_t f = 0;
        vals[f++] = user;
        for (int j = 0; j < cfg.meta_features; ++j) vals[f++] = user_meta[user][j];
        vals[f++] = item;
        for (int j = 0; j < cfg.meta_features; ++j) vals[f++] = item_meta[item][j];

        Dataset& dst = k < n_train ? data.train : (k < n_train + n_val ? data.val : data.test);
        dst.add_sample(slots, label, ts);
    }
    return data;
}

} // namespace adaf2m2
