// Copyright 2026 The Promptveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "promptveil/datasets.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "nlohmann/json.hpp"

namespace promptveil {
namespace {

using nlohmann::json;

using Bank = std::vector<std::string>;

// ---------------------------------------------------------------------------
// Phrase banks

const Bank kCities = {"Toronto", "London", "Paris",  "Berlin",  "Madrid", "Tokyo",   "Sydney",
                      "Chicago", "Boston", "Moscow", "Cairo",   "Mumbai", "Beijing", "Seoul",
                      "Dublin",  "Vienna", "Geneva", "Nairobi", "Lima",   "Oslo"};
const Bank kCountries = {"Iraq",    "Iran",   "China",  "Japan", "Russia", "France",
                         "Germany", "Brazil", "India",  "Egypt", "Sudan",  "Ukraine",
                         "Israel",  "Canada", "Mexico", "Kenya"};
const Bank kLeaders = {"Putin", "Sharon",    "Blair", "Chirac", "Schroeder", "Koizumi",
                       "Annan", "Musharraf", "Abbas", "Karzai", "Bush",      "Kerry"};
const Bank kPlayers = {"Federer",   "Agassi", "Beckham", "Ronaldo", "Woods",     "Phelps",
                       "Armstrong", "Henry",  "Jordan",  "Bonds",   "Sorenstam", "Roddick"};
const Bank kTeams = {"Yankees",  "Red Sox", "Arsenal",     "Chelsea",  "Lakers", "Celtics",
                     "Patriots", "Eagles",  "Real Madrid", "Juventus", "Cubs",   "Rangers"};
const Bank kCompanies = {"Google", "Microsoft", "Intel",    "Oracle", "IBM",   "Apple",
                         "Sony",   "Nokia",     "Boeing",   "Airbus", "Yahoo", "Amazon",
                         "Toyota", "Siemens",   "Vodafone", "Pfizer"};
const Bank kDays = {"Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"};

const Bank kIssues = {"nuclear", "border", "refugee", "ceasefire", "election",
                      "hostage", "oil",    "water",   "trade",     "security"};
const Bank kOfficials = {"officials", "ministers", "diplomats",
                         "envoys",    "delegates", "negotiators"};
const Bank kUnrest = {"protests", "clashes", "riots", "strikes", "demonstrations"};
const Bank kForces = {"troops", "soldiers", "police", "rebels", "militants", "forces"};
const Bank kWorldVerbs = {"condemned", "welcomed", "rejected",
                          "discussed", "debated",  "criticized"};
const Bank kGames = {"match", "game", "final", "semifinal", "derby", "opener"};
const Bank kSportVerbs = {"beat", "defeated", "edged", "routed", "stunned", "topped"};
const Bank kSportEvents = {"tournament", "championship", "series", "season", "playoffs", "league"};
const Bank kInjuries = {"knee", "ankle", "shoulder", "hamstring", "back", "wrist"};
const Bank kMetrics = {"profit", "revenue", "earnings", "sales", "income", "margins"};
const Bank kMarketVerbs = {"rose", "fell", "climbed", "slipped", "jumped", "dropped"};
const Bank kDeals = {"merger", "acquisition", "takeover", "buyout", "partnership", "alliance"};
const Bank kQuarters = {"first", "second", "third", "fourth"};
const Bank kDevices = {"phone",  "laptop",  "chip",      "processor", "server",
                       "camera", "browser", "satellite", "robot",     "telescope"};
const Bank kTech = {"wireless", "software", "broadband", "encryption",
                    "search",   "graphics", "storage",   "voice"};
const Bank kFeatures = {"battery", "speed", "security", "privacy", "memory", "display"};
const Bank kScience = {"scientists", "researchers", "astronomers",
                       "engineers",  "biologists",  "physicists"};
const Bank kDiscoveries = {"planet", "comet",  "virus",   "gene",
                           "fossil", "galaxy", "protein", "asteroid"};

struct Template {
  std::string topic;
  std::string pattern;
};

const std::vector<Template>& NewsTemplates() {
  static const std::vector<Template> kTemplates = {
      {"World", "{LEADER} met {OFFICIALS} in {CITY} on {DAY} to discuss the {ISSUE} crisis ."},
      {"World",
       "{FORCES} clashed with {FORCES2} near {CITY} as {UNREST} spread across {COUNTRY} ."},
      {"World", "{COUNTRY} {WVERB} the {ISSUE} talks , {OFFICIALS} in {CITY} said on {DAY} ."},
      {"World", "{LEADER} urged {COUNTRY} to end the {ISSUE} dispute after {UNREST} in {CITY} ."},
      {"World", "{OFFICIALS} from {COUNTRY} and {COUNTRY2} {WVERB} a {ISSUE} plan in {CITY} ."},
      {"World", "{UNREST} erupted in {CITY} after {FORCES} arrested {ISSUE} activists on {DAY} ."},
      {"Sports", "The {TEAM} {SVERB} the {TEAM2} {NUM} - {NUM2} in {CITY} on {DAY} ."},
      {"Sports", "{PLAYER} won the {GAME} in {CITY} to reach the {EVENT} final ."},
      {"Sports", "{PLAYER} missed the {GAME} with a {INJURY} injury as the {TEAM} lost again ."},
      {"Sports", "The {TEAM} signed {PLAYER} before the {EVENT} opener against the {TEAM2} ."},
      {"Sports", "{PLAYER} scored twice as the {TEAM} {SVERB} the {TEAM2} in the {GAME} ."},
      {"Sports", "Fans in {CITY} cheered as the {TEAM} clinched the {EVENT} on {DAY} ."},
      {"Business",
       "{COMPANY} shares {MVERB} {NUM} percent after {QUARTER} quarter {METRIC} beat forecasts ."},
      {"Business", "{COMPANY} agreed to a {DEAL} with {COMPANY2} worth {NUM} billion dollars ."},
      {"Business", "Investors in {CITY} sold {COMPANY} stock as {METRIC} {MVERB} on {DAY} ."},
      {"Business",
       "{COMPANY} said {QUARTER} quarter {METRIC} {MVERB} on weak demand in {COUNTRY} ."},
      {"Business", "Regulators in {COUNTRY} approved the {DEAL} of {COMPANY} by {COMPANY2} ."},
      {"Business", "Oil prices {MVERB} and {COMPANY} cut its {METRIC} outlook on {DAY} ."},
      {"Sci/Tech", "{COMPANY} unveiled a new {DEVICE} that uses {TECH} to improve {FEATURE} ."},
      {"Sci/Tech", "{SCIENCE} in {CITY} discovered a new {DISCOVERY} using a powerful {DEVICE} ."},
      {"Sci/Tech", "{COMPANY} released {TECH} software to fix a {FEATURE} flaw in its {DEVICE} ."},
      {"Sci/Tech", "{SCIENCE} said the {DISCOVERY} could explain how the {DISCOVERY2} formed ."},
      {"Sci/Tech", "{COMPANY} and {COMPANY2} will build a {TECH} {DEVICE} with better {FEATURE} ."},
      {"Sci/Tech",
       "A {TECH} {DEVICE} from {COMPANY} promises faster {FEATURE} for users in {COUNTRY} ."},
  };
  return kTemplates;
}

const Bank* BankFor(std::string_view slot) {
  static const std::map<std::string, const Bank*, std::less<>> kSlots = {
      {"CITY", &kCities},
      {"COUNTRY", &kCountries},
      {"LEADER", &kLeaders},
      {"PLAYER", &kPlayers},
      {"TEAM", &kTeams},
      {"COMPANY", &kCompanies},
      {"DAY", &kDays},
      {"ISSUE", &kIssues},
      {"OFFICIALS", &kOfficials},
      {"UNREST", &kUnrest},
      {"FORCES", &kForces},
      {"WVERB", &kWorldVerbs},
      {"GAME", &kGames},
      {"SVERB", &kSportVerbs},
      {"EVENT", &kSportEvents},
      {"INJURY", &kInjuries},
      {"METRIC", &kMetrics},
      {"MVERB", &kMarketVerbs},
      {"DEAL", &kDeals},
      {"QUARTER", &kQuarters},
      {"DEVICE", &kDevices},
      {"TECH", &kTech},
      {"FEATURE", &kFeatures},
      {"SCIENCE", &kScience},
      {"DISCOVERY", &kDiscoveries}};
  auto it = kSlots.find(slot);
  return it == kSlots.end() ? nullptr : it->second;
}

const std::string& Pick(const Bank& bank, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, bank.size() - 1);
  return bank[d(rng)];
}

// Expands {SLOT} and {SLOT2}; a numbered slot never repeats its base value.
std::string FillTemplate(const std::string& pattern, std::mt19937_64& rng) {
  std::map<std::string, std::string> used;
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out += pattern[i++];
      continue;
    }
    const std::size_t close = pattern.find('}', i);
    std::string slot = pattern.substr(i + 1, close - i - 1);
    i = close + 1;
    if (slot == "NUM" || slot == "NUM2") {
      std::uniform_int_distribution<int> d(slot == "NUM" ? 2 : 0, 9);
      out += std::to_string(d(rng));
      continue;
    }
    std::string base = slot;
    if (!base.empty() && base.back() == '2') base.pop_back();
    const Bank* bank = BankFor(base);
    std::string value = Pick(*bank, rng);
    if (base != slot) {
      while (value == used[base]) value = Pick(*bank, rng);
    }
    used[slot] = value;
    out += value;
  }
  // Re-join " ," and " ." style spacing into natural punctuation.
  std::string cleaned;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k] == ' ' && k + 1 < out.size() && (out[k + 1] == ',' || out[k + 1] == '.')) continue;
    cleaned += out[k];
  }
  return cleaned;
}

// Portrait phrase banks.
const std::map<std::string, Bank>& SymptomPhrases() {
  static const std::map<std::string, Bank> kPhrases = {
      {"major depressive disorder",
       {"I feel empty and hopeless most days and nothing brings me joy anymore",
        "I sleep too much, I have no energy, and I keep thinking I am worthless"}},
      {"generalized anxiety disorder",
       {"I worry constantly about everything and my mind never stops racing",
        "my chest feels tight and I cannot stop worrying about what could go wrong"}},
      {"bipolar disorder",
       {"I swing between weeks of racing energy with no sleep and weeks of deep sadness",
        "sometimes I feel unstoppable and spend wildly, then I crash for days"}},
      {"post-traumatic stress disorder",
       {"I keep having flashbacks and nightmares about the accident",
        "loud noises make me jump and I avoid anything that reminds me of that night"}},
      {"obsessive-compulsive disorder",
       {"I check the locks again and again and I cannot stop washing my hands",
        "intrusive thoughts force me to repeat rituals until it feels right"}},
      {"panic disorder",
       {"out of nowhere my heart pounds, I cannot breathe, and I think I am dying",
        "sudden attacks of terror hit me and now I fear the next one"}},
      {"insomnia disorder",
       {"I lie awake for hours every night and wake up long before dawn",
        "I cannot fall asleep or stay asleep and I am exhausted all day"}},
      {"schizophrenia",
       {"I hear voices commenting on what I do and I feel people are watching me",
        "my thoughts get jumbled and I sometimes see things others do not"}},
      {"anorexia nervosa",
       {"I am terrified of gaining weight and I skip meals even when I am weak",
        "I count every calorie and still see myself as too big"}},
      {"attention-deficit/hyperactivity disorder",
       {"I cannot focus on anything, I lose things constantly, and I feel restless",
        "I start tasks and never finish them because my attention keeps drifting"}},
  };
  return kPhrases;
}

const Bank kWorkLines = {
    "My work as a {OCCUPATION} has become almost impossible to manage",
    "Being a {OCCUPATION} means people depend on me, and I feel I am letting them down",
    "I have been calling in sick from my job as a {OCCUPATION} more often",
    "My colleagues at work have noticed I am not the {OCCUPATION} I used to be"};
const Bank kPlaceLines = {
    "Life in {LOCATION} feels lonely even with so many people around",
    "I moved to {LOCATION} for work and I still do not have anyone to talk to",
    "The long winters in {LOCATION} make everything harder",
    "My family back in {LOCATION} does not understand what I am going through"};
const Bank kOpenings = {"I'm a {AGE}-year-old {GENDER} {OCCUPATION} living in {LOCATION}.",
                        "I am {AGE}, a {GENDER} {OCCUPATION} from {LOCATION}.",
                        "I'm {AGE} years old and I work as a {OCCUPATION} in {LOCATION}."};

std::string Substitute(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string marker = "{" + key + "}";
    for (std::size_t at = text.find(marker); at != std::string::npos;
         at = text.find(marker, at + value.size())) {
      text.replace(at, marker.size(), value);
    }
  }
  return text;
}

// ---------------------------------------------------------------------------
// Corpus IO helpers

std::string EscapeTsv(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t':
        out += "\\t";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\\':
        out += "\\\\";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string UnescapeTsv(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      out += n == 't' ? '\t' : n == 'n' ? '\n' : n;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

// One CSV record starting at `line_no`; returns false at end of input.
bool ReadCsvRecord(std::istream& in, std::size_t& line_no, std::vector<std::string>& fields,
                   const std::string& path) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_no;
  const std::size_t first_line = line_no;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i >= line.size()) {
      if (quoted) {
        if (!std::getline(in, line)) {
          throw Error(ErrorCode::kParseError,
                      path + ":" + std::to_string(first_line) + ": unterminated quoted field");
        }
        ++line_no;
        field += '\n';
        i = 0;
        continue;
      }
      break;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        i += 2;
      } else if (c == '"') {
        quoted = false;
        ++i;
      } else {
        field += c;
        ++i;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
      ++i;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      ++i;
    } else if (c == '\r' && i + 1 == line.size()) {
      ++i;
    } else {
      field += c;
      ++i;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

std::string CsvQuote(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void CheckLabel(const LabeledExample& ex, const CorpusSchema& schema, const std::string& where) {
  if (schema.allowed_labels.empty()) return;
  if (std::find(schema.allowed_labels.begin(), schema.allowed_labels.end(), ex.label) ==
      schema.allowed_labels.end()) {
    throw Error(ErrorCode::kParseError, where + ": label '" + ex.label + "' is not allowed");
  }
}

LabeledExample FromColumns(const std::vector<std::string>& header,
                           const std::vector<std::string>& fields, const CorpusSchema& schema,
                           const std::string& where, bool tsv) {
  if (fields.size() != header.size()) {
    throw Error(ErrorCode::kParseError, where + ": expected " + std::to_string(header.size()) +
                                            " fields, found " + std::to_string(fields.size()));
  }
  auto column = [&](const std::string& name) -> const std::string& {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::kParseError, where + ": missing column '" + name + "'");
    }
    return fields[static_cast<std::size_t>(it - header.begin())];
  };
  LabeledExample ex;
  ex.text = tsv ? UnescapeTsv(column(schema.text_field)) : column(schema.text_field);
  if (schema.label_field.empty()) {
    for (const std::string& a : schema.attribute_fields) {
      ex.attributes[a] = tsv ? UnescapeTsv(column(a)) : column(a);
    }
    return ex;
  }
  ex.label = tsv ? UnescapeTsv(column(schema.label_field)) : column(schema.label_field);
  if (ex.label.empty()) {
    throw Error(ErrorCode::kParseError, where + ": missing field '" + schema.label_field + "'");
  }
  for (const std::string& a : schema.attribute_fields) {
    ex.attributes[a] = tsv ? UnescapeTsv(column(a)) : column(a);
  }
  CheckLabel(ex, schema, where);
  return ex;
}

std::string JsonScalar(const json& v, const std::string& where, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  throw Error(ErrorCode::kParseError, where + ": field '" + key + "' must be a scalar");
}

}  // namespace

CorpusFormat ParseCorpusFormat(std::string_view name) {
  if (name == "tsv") return CorpusFormat::kTsv;
  if (name == "csv") return CorpusFormat::kCsv;
  if (name == "jsonl") return CorpusFormat::kJsonl;
  throw Error(ErrorCode::kConfigError, "unknown corpus format '" + std::string(name) + "'");
}

CorpusFormat CorpusFormatFromPath(const std::string& path) {
  const std::string lower = ToLower(path);
  auto ends_with = [&](std::string_view suffix) {
    return lower.size() >= suffix.size() &&
           lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".tsv")) return CorpusFormat::kTsv;
  if (ends_with(".csv")) return CorpusFormat::kCsv;
  if (ends_with(".jsonl") || ends_with(".json")) return CorpusFormat::kJsonl;
  throw Error(ErrorCode::kConfigError, "cannot infer corpus format of " + path);
}

std::vector<LabeledExample> LoadCorpus(const std::string& path, CorpusFormat format,
                                       const CorpusSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open corpus file " + path);
  std::vector<LabeledExample> out;
  std::size_t line_no = 0;

  if (format == CorpusFormat::kJsonl) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = path + ":" + std::to_string(line_no);
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParseError, where + ": " + e.what());
      }
      if (!j.is_object()) throw Error(ErrorCode::kParseError, where + ": not a JSON object");
      for (const std::string* key : {&schema.text_field, &schema.label_field}) {
        if (!key->empty() && !j.contains(*key)) {
          throw Error(ErrorCode::kParseError, where + ": missing field '" + *key + "'");
        }
      }
      LabeledExample ex;
      ex.text = JsonScalar(j[schema.text_field], where, schema.text_field);
      if (!schema.label_field.empty()) {
        ex.label = JsonScalar(j[schema.label_field], where, schema.label_field);
      }
      if (j.contains("attributes")) {
        if (!j["attributes"].is_object()) {
          throw Error(ErrorCode::kParseError, where + ": 'attributes' must be an object");
        }
        for (auto it = j["attributes"].begin(); it != j["attributes"].end(); ++it) {
          ex.attributes[it.key()] = JsonScalar(it.value(), where, it.key());
        }
      }
      // Schema attributes may sit at the top level or inside "attributes".
      for (const std::string& a : schema.attribute_fields) {
        if (j.contains(a)) {
          ex.attributes[a] = JsonScalar(j[a], where, a);
        } else if (!ex.attributes.contains(a)) {
          throw Error(ErrorCode::kParseError, where + ": missing field '" + a + "'");
        }
      }
      if (j.contains("expert_reviewed")) ex.expert_reviewed = j["expert_reviewed"].get<bool>();
      CheckLabel(ex, schema, where);
      out.push_back(std::move(ex));
    }
    return out;
  }

  std::vector<std::string> header;
  std::vector<std::string> fields;
  if (format == CorpusFormat::kTsv) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (header.empty()) {
        header = SplitTabs(line);
        continue;
      }
      if (line.empty()) continue;
      out.push_back(
          FromColumns(header, SplitTabs(line), schema, path + ":" + std::to_string(line_no), true));
    }
    return out;
  }

  while (true) {
    const std::size_t start = line_no + 1;
    if (!ReadCsvRecord(in, line_no, fields, path)) break;
    if (header.empty()) {
      header = fields;
      continue;
    }
    if (fields.size() == 1 && fields[0].empty()) continue;
    out.push_back(FromColumns(header, fields, schema, path + ":" + std::to_string(start), false));
  }
  return out;
}

void SaveCorpus(const std::string& path, CorpusFormat format,
                std::span<const LabeledExample> examples, const CorpusSchema& schema) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write corpus file " + path);
  if (format == CorpusFormat::kJsonl) {
    for (const LabeledExample& ex : examples) {
      json j;
      j[schema.text_field] = ex.text;
      if (!schema.label_field.empty()) j[schema.label_field] = ex.label;
      if (!ex.attributes.empty()) j["attributes"] = ex.attributes;
      if (!ex.attributes.empty() || ex.expert_reviewed) j["expert_reviewed"] = ex.expert_reviewed;
      out << j.dump() << '\n';
    }
    return;
  }
  const bool tsv = format == CorpusFormat::kTsv;
  const std::string sep = tsv ? "\t" : ",";
  auto cell = [&](std::string_view s) { return tsv ? EscapeTsv(s) : CsvQuote(s); };
  const bool labelled = !schema.label_field.empty();
  out << cell(schema.text_field);
  if (labelled) out << sep << cell(schema.label_field);
  for (const std::string& a : schema.attribute_fields) out << sep << cell(a);
  out << '\n';
  for (const LabeledExample& ex : examples) {
    out << cell(ex.text);
    if (labelled) out << sep << cell(ex.label);
    for (const std::string& a : schema.attribute_fields) {
      auto it = ex.attributes.find(a);
      out << sep << cell(it == ex.attributes.end() ? "" : it->second);
    }
    out << '\n';
  }
}

PortraitCategories PortraitCategories::Default() {
  PortraitCategories c;
  c.locations = {"Toronto",   "Vancouver",  "Ontario",  "London",    "Manchester",
                 "Edinburgh", "Dublin",     "Sydney",   "Melbourne", "Brisbane",
                 "Auckland",  "Wellington", "Boston",   "Chicago",   "Seattle",
                 "Texas",     "California", "New York", "Cape Town", "Florida"};
  c.occupations = {"nurse",      "teacher",   "driver",   "accountant", "electrician",
                   "chef",       "lawyer",    "engineer", "farmer",     "firefighter",
                   "pharmacist", "plumber",   "cashier",  "journalist", "mechanic",
                   "architect",  "librarian", "dentist",  "carpenter",  "programmer"};
  c.disorders = {"major depressive disorder",
                 "generalized anxiety disorder",
                 "bipolar disorder",
                 "post-traumatic stress disorder",
                 "obsessive-compulsive disorder",
                 "panic disorder",
                 "insomnia disorder",
                 "schizophrenia",
                 "anorexia nervosa",
                 "attention-deficit/hyperactivity disorder"};
  return c;
}

PortraitCategories PortraitCategories::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open categories file " + path);
  try {
    const json j = json::parse(in);
    PortraitCategories c;
    c.locations = j.at("locations").get<std::vector<std::string>>();
    c.occupations = j.at("occupations").get<std::vector<std::string>>();
    c.disorders = j.at("disorders").get<std::vector<std::string>>();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

std::vector<std::string> PortraitCategories::Warnings() const {
  std::vector<std::string> out;
  auto check = [&](const char* name, const std::vector<std::string>& list, std::size_t want) {
    if (list.size() != want) {
      out.push_back(std::string(name) + " has " + std::to_string(list.size()) +
                    " entries, expected " + std::to_string(want));
    }
  };
  check("locations", locations, kPortraitLocations);
  check("occupations", occupations, kPortraitOccupations);
  check("disorders", disorders, kPortraitDisorders);
  return out;
}

PortraitProfile SampleProfile(std::uint64_t seed, const PortraitCategories& categories) {
  if (categories.locations.empty() || categories.occupations.empty() ||
      categories.disorders.empty()) {
    throw Error(ErrorCode::kConfigError, "portrait categories must not be empty");
  }
  std::mt19937_64 rng(seed);
  PortraitProfile p;
  p.age = std::uniform_int_distribution<int>(18, 65)(rng);
  p.gender = std::bernoulli_distribution(0.5)(rng) ? "male" : "female";
  p.location = Pick(categories.locations, rng);
  p.occupation = Pick(categories.occupations, rng);
  p.disorder = Pick(categories.disorders, rng);
  return p;
}

std::map<std::string, std::string> ProfileValues(const PortraitProfile& profile) {
  return {{"AGE", std::to_string(profile.age)},
          {"GENDER", profile.gender},
          {"OCCUPATION", profile.occupation},
          {"DISORDER", profile.disorder},
          {"LOCATION", profile.location}};
}

std::map<std::string, std::string> ProfileAttributes(const PortraitProfile& profile) {
  return {{"age", std::to_string(profile.age)},
          {"gender", profile.gender},
          {"location", profile.location},
          {"occupation", profile.occupation},
          {"disorder", profile.disorder}};
}

LabeledExample GeneratePortrait(const PortraitProfile& profile, ChatClient& client,
                                const TaskTemplate& tmpl) {
  const std::vector<ChatMessage> request = tmpl.Render(ProfileValues(profile));
  LabeledExample ex;
  ex.text = client.Complete(request);
  ex.label = profile.disorder;
  ex.attributes = ProfileAttributes(profile);
  return ex;
}

std::string ComposePortraitNarrative(const PortraitProfile& profile, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto values = ProfileValues(profile);
  const auto& symptoms = SymptomPhrases();
  auto it = symptoms.find(profile.disorder);
  const std::string symptom =
      it != symptoms.end() ? Pick(it->second, rng)
                           : "I have not felt like myself for months and it keeps getting worse";
  std::string text = Substitute(Pick(kOpenings, rng), values);
  text += " Lately " + symptom + ". ";
  text += Substitute(Pick(kWorkLines, rng), values) + ". ";
  text += Substitute(Pick(kPlaceLines, rng), values) + ".";
  return text;
}

std::vector<LabeledExample> SyntheticNews(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  const auto& templates = NewsTemplates();
  std::uniform_int_distribution<std::size_t> pick(0, templates.size() - 1);
  std::vector<LabeledExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Template& t = templates[pick(rng)];
    out.push_back({FillTemplate(t.pattern, rng), t.topic, {}, false});
  }
  return out;
}

GazetteerNer::Gazetteer DefaultGazetteer() {
  GazetteerNer::Gazetteer g;
  auto& loc = g[std::string(labels::kLocation)];
  loc.insert(loc.end(), kCities.begin(), kCities.end());
  loc.insert(loc.end(), kCountries.begin(), kCountries.end());
  for (const auto& l : PortraitCategories::Default().locations) {
    if (std::find(loc.begin(), loc.end(), l) == loc.end()) loc.push_back(l);
  }
  auto& per = g[std::string(labels::kPerson)];
  per.insert(per.end(), kLeaders.begin(), kLeaders.end());
  per.insert(per.end(), kPlayers.begin(), kPlayers.end());
  auto& org = g[std::string(labels::kOrganization)];
  org.insert(org.end(), kTeams.begin(), kTeams.end());
  org.insert(org.end(), kCompanies.begin(), kCompanies.end());
  return g;
}

}  // namespace promptveil
