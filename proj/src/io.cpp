// SPDX-License-Identifier: Apache-2.0
//
// ddchan - joint element/group sparse estimation of delay-Doppler channels
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "ddchan/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ddchan
{

namespace
{
std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string &line, char sep = ',')
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep))
        out.push_back(trim(field));
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

[[noreturn]] void bad(const char *what, std::size_t line_no, const std::string &msg)
{
    throw std::invalid_argument(std::string(what) + ": line " + std::to_string(line_no) + ": " + msg);
}

double parse_double(const std::string &s, const char *what, std::size_t line_no)
{
    double v = 0.0;
    const auto *first = s.data();
    const auto *last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || s.empty())
        bad(what, line_no, "expected a number, got '" + s + "'");
    return v;
}

Index parse_index(const std::string &s, const char *what, std::size_t line_no)
{
    long long v = 0;
    const auto *first = s.data();
    const auto *last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || s.empty())
        bad(what, line_no, "expected an integer, got '" + s + "'");
    return static_cast<Index>(v);
}

// Non-empty lines with their 1-based numbers.
std::vector<std::pair<std::size_t, std::string>> lines_of(const std::string &text)
{
    std::vector<std::pair<std::size_t, std::string>> out;
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line))
    {
        ++n;
        auto t = trim(line);
        if (!t.empty())
            out.emplace_back(n, std::move(t));
    }
    return out;
}

// "key=value" pairs from a comment line like "# K=4,M=2".
std::vector<std::pair<std::string, std::string>> header_pairs(const std::string &line)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &f : split(trim(std::string_view(line).substr(1))))
    {
        const auto eq = f.find('=');
        if (eq == std::string::npos)
            continue;
        out.emplace_back(trim(std::string_view(f).substr(0, eq)), trim(std::string_view(f).substr(eq + 1)));
    }
    return out;
}
} // namespace

std::string read_text(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string scenario_to_csv(const Scenario &s)
{
    std::ostringstream os;
    os << "# tx_x=" << num(s.tx.position.x) << ",tx_y=" << num(s.tx.position.y) << ",tx_speed=" << num(s.tx.speed)
       << ",rx_x=" << num(s.rx.position.x) << ",rx_y=" << num(s.rx.position.y) << ",rx_speed=" << num(s.rx.speed)
       << '\n';
    os << "kind,x,y,speed,gain_re,gain_im\n";
    for (const auto &p : s.scatterers)
        os << to_string(p.kind) << ',' << num(p.position.x) << ',' << num(p.position.y) << ',' << num(p.speed) << ','
           << num(p.gain.real()) << ',' << num(p.gain.imag()) << '\n';
    return os.str();
}

Scenario scenario_from_csv(const std::string &text)
{
    constexpr const char *what = "scenario csv";
    Scenario s;
    bool have_header = false;
    bool have_columns = false;
    for (const auto &[n, line] : lines_of(text))
    {
        if (line.front() == '#')
        {
            std::set<std::string> seen;
            for (const auto &[key, value] : header_pairs(line))
            {
                const double v = parse_double(value, what, n);
                if (key == "tx_x")
                    s.tx.position.x = v;
                else if (key == "tx_y")
                    s.tx.position.y = v;
                else if (key == "tx_speed")
                    s.tx.speed = v;
                else if (key == "rx_x")
                    s.rx.position.x = v;
                else if (key == "rx_y")
                    s.rx.position.y = v;
                else if (key == "rx_speed")
                    s.rx.speed = v;
                else
                    bad(what, n, "unknown header key '" + key + "'");
                seen.insert(key);
            }
            if (seen.size() != 6)
                bad(what, n, "terminal header needs tx_x, tx_y, tx_speed, rx_x, rx_y, rx_speed");
            have_header = true;
            continue;
        }
        if (!have_columns)
        {
            if (line != "kind,x,y,speed,gain_re,gain_im")
                bad(what, n, "expected column header 'kind,x,y,speed,gain_re,gain_im'");
            have_columns = true;
            continue;
        }
        const auto f = split(line);
        if (f.size() != 6)
            bad(what, n, "expected 6 fields");
        Scatterer p;
        try
        {
            p.kind = scatterer_kind_from_string(f[0]);
        }
        catch (const std::invalid_argument &e)
        {
            bad(what, n, e.what());
        }
        p.position = {parse_double(f[1], what, n), parse_double(f[2], what, n)};
        p.speed = parse_double(f[3], what, n);
        p.gain = {parse_double(f[4], what, n), parse_double(f[5], what, n)};
        s.scatterers.push_back(p);
    }
    if (!have_header)
        throw std::invalid_argument("scenario csv: missing terminal header");
    if (s.scatterers.empty() || s.scatterers.front().kind != ScattererKind::Los)
        throw std::invalid_argument("scenario csv: first scatterer row must be the LOS path");
    return s;
}

std::string spreading_to_csv(const SpreadingFunction &h)
{
    const auto &g = h.grid;
    std::ostringstream os;
    os << "# K=" << g.doppler_half << ",M=" << g.delay_taps << ",N_r=" << g.block_length
       << ",T_s=" << num(g.sample_period) << ",t0=" << num(g.t0) << '\n';
    os << "k,m,re,im\n";
    for (Index m = 0; m < g.delay_taps; ++m)
        for (Index k = -g.doppler_half; k <= g.doppler_half; ++k)
        {
            const cplx v = h(k, m);
            if (v != cplx{0.0, 0.0})
                os << k << ',' << m << ',' << num(v.real()) << ',' << num(v.imag()) << '\n';
        }
    return os.str();
}

SpreadingFunction spreading_from_csv(const std::string &text)
{
    constexpr const char *what = "spreading csv";
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front().second.front() != '#')
        throw std::invalid_argument("spreading csv: missing '# K=..,M=..' header");
    DelayDopplerGrid g;
    g.block_length = 0;
    g.sample_period = 1.0;
    bool have_k = false, have_m = false;
    const auto n0 = lines.front().first;
    for (const auto &[key, value] : header_pairs(lines.front().second))
    {
        if (key == "K")
            g.doppler_half = parse_index(value, what, n0), have_k = true;
        else if (key == "M")
            g.delay_taps = parse_index(value, what, n0), have_m = true;
        else if (key == "N_r")
            g.block_length = parse_index(value, what, n0);
        else if (key == "T_s")
            g.sample_period = parse_double(value, what, n0);
        else if (key == "t0")
            g.t0 = parse_double(value, what, n0);
        else
            bad(what, n0, "unknown header key '" + key + "'");
    }
    if (!have_k || !have_m)
        bad(what, n0, "header must give K and M");
    if (g.block_length == 0)
        g.block_length = 2 * g.doppler_half + 1;
    try
    {
        g.validate();
    }
    catch (const std::invalid_argument &e)
    {
        bad(what, n0, e.what());
    }

    SpreadingFunction h(g);
    std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
    std::size_t i = 1;
    if (i < lines.size() && lines[i].second == "k,m,re,im")
        ++i;
    for (; i < lines.size(); ++i)
    {
        const auto &[n, line] = lines[i];
        const auto f = split(line);
        if (f.size() != 4)
            bad(what, n, "expected 4 fields");
        const Index k = parse_index(f[0], what, n);
        const Index m = parse_index(f[1], what, n);
        if (k < -g.doppler_half || k > g.doppler_half || m < 0 || m >= g.delay_taps)
            bad(what, n, "bin (" + f[0] + ", " + f[1] + ") outside the grid");
        const auto j = static_cast<std::size_t>(g.index(k, m));
        if (seen[j])
            bad(what, n, "duplicate bin (" + f[0] + ", " + f[1] + ")");
        seen[j] = 1;
        h(k, m) = {parse_double(f[2], what, n), parse_double(f[3], what, n)};
    }
    return h;
}

SpreadingFunction import_spreading_csv(const std::filesystem::path &path)
{
    return spreading_from_csv(read_text(path));
}

void export_spreading_csv(const SpreadingFunction &h, const std::filesystem::path &path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << spreading_to_csv(h);
}

std::string matrix_to_csv(const CMatrix &m)
{
    std::string s;
    s.reserve(static_cast<std::size_t>(m.size()) * 52);
    for (Index r = 0; r < m.rows(); ++r)
    {
        for (Index c = 0; c < m.cols(); ++c)
        {
            if (c)
                s += ',';
            s += num(m(r, c).real());
            s += ',';
            s += num(m(r, c).imag());
        }
        s += '\n';
    }
    return s;
}

CMatrix matrix_from_csv(const std::string &text)
{
    constexpr const char *what = "matrix csv";
    std::vector<std::vector<cplx>> rows;
    for (const auto &[n, line] : lines_of(text))
    {
        const auto f = split(line);
        if (f.size() % 2 != 0)
            bad(what, n, "odd number of fields");
        std::vector<cplx> row;
        for (std::size_t i = 0; i < f.size(); i += 2)
            row.emplace_back(parse_double(f[i], what, n), parse_double(f[i + 1], what, n));
        if (!rows.empty() && row.size() != rows.front().size())
            bad(what, n, "row length differs from the first row");
        rows.push_back(std::move(row));
    }
    const Index nr = static_cast<Index>(rows.size());
    const Index nc = nr ? static_cast<Index>(rows.front().size()) : 0;
    CMatrix m(nr, nc);
    for (Index r = 0; r < nr; ++r)
        for (Index c = 0; c < nc; ++c)
            m(r, c) = rows[r][c];
    return m;
}

std::string partition_to_csv(const GroupPartition &p)
{
    std::ostringstream os;
    os << "group_id,index\n";
    for (std::size_t g = 0; g < p.groups.size(); ++g)
        for (Index j : p.groups[g])
            os << g << ',' << j << '\n';
    return os.str();
}

std::string regions_to_csv(const Regions &r)
{
    const auto rec = r.to_record();
    std::ostringstream os;
    os << "m0,dm,m_max,k_s,dk,k_max\n";
    for (std::size_t i = 0; i < rec.size(); ++i)
        os << (i ? "," : "") << rec[i];
    os << '\n';
    return os.str();
}

Regions regions_from_csv(const std::string &text)
{
    constexpr const char *what = "regions csv";
    const auto lines = lines_of(text);
    std::size_t i = 0;
    if (!lines.empty() && lines[0].second == "m0,dm,m_max,k_s,dk,k_max")
        ++i;
    if (lines.size() != i + 1)
        throw std::invalid_argument("regions csv: expected exactly one record");
    const auto f = split(lines[i].second);
    if (f.size() != 6)
        bad(what, lines[i].first, "expected 6 integers");
    std::array<Index, 6> rec{};
    for (std::size_t j = 0; j < 6; ++j)
        rec[j] = parse_index(f[j], what, lines[i].first);
    return Regions::from_record(rec);
}

} // namespace ddchan
