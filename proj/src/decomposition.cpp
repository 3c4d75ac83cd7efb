#include "poolsight/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "poolsight/csv.hpp"
#include "poolsight/regression.hpp"

namespace poolsight {

std::vector<ChargingEvent> load_events_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    const int c_pool = t.require_column("pool_id", path);
    const int c_point = t.require_column("point_id", path);
    const int c_start = t.column("start_time");
    const int c_end = t.column("end_time");
    const int c_conn = t.column("connection_h");
    const int c_charge = t.require_column("charging_h", path);
    const int c_idle = t.column("idle_h");
    const int c_energy = t.require_column("energy_kwh", path);
    const int c_rfid = t.column("rfid_count");

    auto num = [&](const std::vector<std::string>& row, int c, size_t line) {
        if (c < 0) return 0.0;
        auto v = csv::parse_double(row[static_cast<size_t>(c)]);
        if (!v) throw DataError(path + ": non-numeric field in row " + std::to_string(line));
        return *v;
    };

    std::vector<ChargingEvent> events;
    events.reserve(t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        ChargingEvent e;
        e.pool_id = row[static_cast<size_t>(c_pool)];
        e.point_id = row[static_cast<size_t>(c_point)];
        if (c_start >= 0) e.start_time = row[static_cast<size_t>(c_start)];
        if (c_end >= 0) e.end_time = row[static_cast<size_t>(c_end)];
        e.connection_h = num(row, c_conn, i + 2);
        e.charging_h = num(row, c_charge, i + 2);
        e.idle_h = num(row, c_idle, i + 2);
        e.energy_kwh = num(row, c_energy, i + 2);
        e.rfid_count = static_cast<int>(num(row, c_rfid, i + 2));
        events.push_back(std::move(e));
    }
    if (events.empty()) throw DataError(path + ": no events");
    return events;
}

void save_events_csv(std::span<const ChargingEvent> events, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write events: " + path);
    out << "pool_id,point_id,start_time,end_time,connection_h,charging_h,idle_h,energy_kwh,"
           "rfid_count\n";
    for (const auto& e : events) {
        out << csv::quote(e.pool_id) << "," << csv::quote(e.point_id) << ","
            << csv::quote(e.start_time) << "," << csv::quote(e.end_time) << ","
            << csv::format_double(e.connection_h) << "," << csv::format_double(e.charging_h) << ","
            << csv::format_double(e.idle_h) << "," << csv::format_double(e.energy_kwh) << ","
            << e.rfid_count << "\n";
    }
}

std::vector<PoolUsage> pool_metrics(std::span<const ChargingEvent> events) {
    if (events.empty()) throw DataError("pool_metrics: empty event log");

    std::string bad_events;
    int bad_count = 0;
    for (size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.energy_kwh < 0.0 || e.charging_h < 0.0) {
            throw DataError("pool_metrics: negative energy or charging time in event " +
                            std::to_string(i));
        }
        if (e.charging_h == 0.0 && e.energy_kwh > 0.0) {
            ++bad_count;
            if (bad_count <= 5) {
                bad_events += (bad_events.empty() ? "" : ", ") + e.pool_id + "/" + e.point_id +
                              "#" + std::to_string(i);
            }
        }
    }
    if (bad_count > 0) {
        throw DataError("pool_metrics: " + std::to_string(bad_count) +
                        " events have zero charging time with positive energy: " + bad_events);
    }

    struct PointAcc {
        double energy = 0.0;
        double max_power = 0.0;
    };
    struct PoolAcc {
        int n = 0;
        double energy = 0.0;
        double charging_h = 0.0;
        std::map<std::string, PointAcc> points;
    };
    std::map<std::string, PoolAcc> pools;
    for (const auto& e : events) {
        PoolAcc& acc = pools[e.pool_id];
        ++acc.n;
        acc.energy += e.energy_kwh;
        acc.charging_h += e.charging_h;
        PointAcc& pt = acc.points[e.point_id];
        pt.energy += e.energy_kwh;
        if (e.charging_h > 0.0) {
            pt.max_power = std::max(pt.max_power, e.energy_kwh / e.charging_h);
        }
    }

    std::vector<PoolUsage> out;
    out.reserve(pools.size());
    for (const auto& [id, acc] : pools) {
        PoolUsage u;
        u.pool_id = id;
        u.n_transactions = acc.n;
        u.energy_kwh = acc.energy;
        u.avg_charging_time_h = acc.charging_h / acc.n;
        u.avg_power_kw = acc.charging_h > 0.0 ? acc.energy / acc.charging_h : 0.0;
        u.n_points = static_cast<int>(acc.points.size());
        for (const auto& [pid, pt] : acc.points) {
            (void)pid;
            u.capacity_kw += pt.max_power;
            u.max_point_energy = std::max(u.max_point_energy, pt.energy);
        }
        u.energy_per_point = u.energy_kwh / u.n_points;
        u.energy_per_capacity = u.capacity_kw > 0.0 ? u.energy_kwh / u.capacity_kw : 0.0;
        out.push_back(std::move(u));
    }
    return out;
}

void save_pool_usage_csv(std::span<const PoolUsage> usages, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write pool usage: " + path);
    out << "pool_id,n_transactions,avg_charging_time_h,avg_power_kw,energy_kwh,n_points,"
           "capacity_kw,energy_per_point,max_point_energy,energy_per_capacity\n";
    for (const auto& u : usages) {
        out << csv::quote(u.pool_id) << "," << u.n_transactions << ","
            << csv::format_double(u.avg_charging_time_h) << ","
            << csv::format_double(u.avg_power_kw) << "," << csv::format_double(u.energy_kwh) << ","
            << u.n_points << "," << csv::format_double(u.capacity_kw) << ","
            << csv::format_double(u.energy_per_point) << ","
            << csv::format_double(u.max_point_energy) << ","
            << csv::format_double(u.energy_per_capacity) << "\n";
    }
}

std::vector<SimpleModelRow> simple_models(std::span<const PoolUsage> usages) {
    if (usages.size() < 2) throw DataError("simple_models: need at least 2 pools");
    const size_t n = usages.size();

    struct Model {
        const char* name;
        double (*x)(const PoolUsage&);
    };
    const Model models[6] = {
        {"y=kn", [](const PoolUsage& u) { return static_cast<double>(u.n_transactions); }},
        {"y=kt", [](const PoolUsage& u) { return u.avg_charging_time_h; }},
        {"y=kp", [](const PoolUsage& u) { return u.avg_power_kw; }},
        {"y=k(t*p)", [](const PoolUsage& u) { return u.avg_charging_time_h * u.avg_power_kw; }},
        {"y=k(n*p)", [](const PoolUsage& u) { return u.n_transactions * u.avg_power_kw; }},
        {"y=k(n*t)",
         [](const PoolUsage& u) { return u.n_transactions * u.avg_charging_time_h; }},
    };

    std::vector<SimpleModelRow> rows;
    for (const auto& m : models) {
        SimpleModelRow row;
        row.model = m.name;
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        std::vector<double> ratios;
        for (const auto& u : usages) {
            const double x = m.x(u);
            const double y = u.energy_kwh;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
            if (x != 0.0) ratios.push_back(y / x);
        }
        if (sxx == 0.0) {
            row.skipped = true;
            row.reason = "regressor is identically zero";
            rows.push_back(std::move(row));
            continue;
        }
        row.k_hat = sxy / sxx;
        double rss = 0.0;
        for (const auto& u : usages) {
            const double e = u.energy_kwh - row.k_hat * m.x(u);
            rss += e * e;
        }
        row.r2 = syy > 0.0 ? 1.0 - rss / syy : 1.0;
        if (!ratios.empty()) {
            double mean = 0.0;
            for (double r : ratios) mean += r;
            mean /= static_cast<double>(ratios.size());
            double ss = 0.0;
            for (double r : ratios) ss += (r - mean) * (r - mean);
            row.mean = mean;
            row.stdev = ratios.size() > 1
                            ? std::sqrt(ss / (static_cast<double>(ratios.size()) - 1.0))
                            : 0.0;
            row.cv = mean != 0.0 ? row.stdev / mean : 0.0;
        }
        rows.push_back(std::move(row));
    }
    (void)n;
    return rows;
}

void save_simple_models_csv(std::span<const SimpleModelRow> rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write simple models: " + path);
    out << "model,k_hat,r2,mean,stdev,cv,skipped,reason\n";
    for (const auto& r : rows) {
        out << r.model << "," << csv::format_double(r.k_hat) << "," << csv::format_double(r.r2)
            << "," << csv::format_double(r.mean) << "," << csv::format_double(r.stdev) << ","
            << csv::format_double(r.cv) << "," << (r.skipped ? 1 : 0) << "," << csv::quote(r.reason)
            << "\n";
    }
}

MetricComparison response_metric_comparison(std::span<const PoolUsage> usages,
                                            const FeatureMatrix& X) {
    if (static_cast<Eigen::Index>(usages.size()) != X.n_rows()) {
        throw DataError("response_metric_comparison: usage rows must align with the matrix");
    }
    const Eigen::Index n = X.n_rows();

    MetricComparison cmp;
    cmp.metric_names = {"energy", "energy_per_point", "max_point_energy", "energy_per_capacity"};
    Eigen::MatrixXd metrics(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        const PoolUsage& u = usages[static_cast<size_t>(i)];
        metrics(i, 0) = u.energy_kwh;
        metrics(i, 1) = u.energy_per_point;
        metrics(i, 2) = u.max_point_energy;
        metrics(i, 3) = u.energy_per_capacity;
    }

    for (int m = 0; m < 4; ++m) {
        if ((metrics.col(m).array() <= 0.0).any()) {
            throw DataError("response_metric_comparison: metric '" + cmp.metric_names[m] +
                            "' has non-positive values, log transform undefined");
        }
        const Eigen::VectorXd logy = metrics.col(m).array().log();
        cmp.ols_r2.push_back(ols_fit(X.values, logy).r2);
    }

    cmp.metric_correlations.resize(4, 4);
    Eigen::MatrixXd centered = metrics.rowwise() - metrics.colwise().mean();
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            cmp.metric_correlations(a, b) =
                centered.col(a).dot(centered.col(b)) /
                (centered.col(a).norm() * centered.col(b).norm());
        }
    }
    return cmp;
}

void save_metric_comparison_csv(const MetricComparison& cmp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metric comparison: " + path);
    out << "metric,ols_r2";
    for (const auto& name : cmp.metric_names) out << ",r_" << name;
    out << "\n";
    for (size_t m = 0; m < cmp.metric_names.size(); ++m) {
        out << cmp.metric_names[m] << "," << csv::format_double(cmp.ols_r2[m]);
        for (size_t b = 0; b < cmp.metric_names.size(); ++b) {
            out << ","
                << csv::format_double(cmp.metric_correlations(static_cast<Eigen::Index>(m),
                                                              static_cast<Eigen::Index>(b)));
        }
        out << "\n";
    }
}

}  // namespace poolsight
