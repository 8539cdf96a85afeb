#!/usr/bin/env python3
"""Regenerates the bundled mini corpus, its mock transcripts and ground truth.

Everything is deterministic. The ground truth in expected_report.json is
computed here from the generator's own word tables, independently of the C++
code, and is what the end-to-end replay test compares against.
"""

import json
import random
from collections import defaultdict
from pathlib import Path

HERE = Path(__file__).resolve().parent
FIXTURES = HERE.parent.parent / "tests" / "fixtures"

# ---------------------------------------------------------------------------
# Lexical sources

DEMONETTE = [
    ("avocat", "avocate"), ("chanteur", "chanteuse"), ("étudiant", "étudiante"),
    ("enseignant", "enseignante"), ("utilisateur", "utilisatrice"), ("auteur", "autrice"),
    ("développeur", "développeuse"), ("directeur", "directrice"), ("citoyen", "citoyenne"),
    ("ingénieur", "ingénieure"), ("client", "cliente"), ("artiste", "artiste"),
    ("médecin", ""), ("guide", ""), ("critique", "critique"),
]
WIKIDATA = [("boulanger", "boulangère"), ("infirmier", "infirmière"), ("lecteur", "lectrice"),
            ("joueur", "joueuse")]
NHUMA = [
    ("avocat", "m", "profession"), ("avocate", "f", "profession"), ("médecin", "m", "profession"),
    ("infirmier", "m", "profession"), ("infirmière", "f", "profession"), ("boulanger", "m", "profession"),
    ("parisien", "m", "demonym"), ("parisienne", "f", "demonym"), ("ami", "m", "relationship"),
    ("amie", "f", "relationship"), ("voisin", "m", "relationship"), ("voisine", "f", "relationship"),
    ("citoyen", "m", "status"), ("citoyenne", "f", "status"), ("personne", "f", "other"),
    ("individu", "m", "other"), ("client", "m", "recipient"), ("cliente", "f", "recipient"),
]
PREDICTED = [
    ("chanteur", "doer"), ("chanteuse", "doer"), ("étudiant", "status"), ("étudiante", "status"),
    ("enseignant", "NH-Mét"), ("utilisateur", "doer"), ("auteur", "doer"), ("développeur", "NH-Mét"),
    ("directeur", "NH-Fonc"), ("ingénieur", "NH-Mét"), ("joueur", "doer"), ("programmeur", "NH-Mét"),
    ("chef", "NH-Titre"),
]
RAW_CLASS = {"NH-Mét": "profession", "NH-Fonc": "profession", "NH-Titre": "title"}
WIKTEXTRACT = [
    {"word": "programmeur", "pos": "noun", "tags": ["masculine"],
     "senses": [{"glosses": ["Personne qui écrit des programmes informatiques."]}]},
    {"word": "programmeuse", "pos": "noun", "tags": ["feminine"],
     "senses": [{"glosses": ["Personne qui écrit des programmes informatiques."]}]},
    {"word": "chef", "pos": "noun", "tags": ["masculine"],
     "senses": [{"glosses": ["Personne qui dirige un groupe."]}]},
    {"word": "automate", "pos": "noun", "tags": ["masculine"],
     "senses": [{"glosses": ["Machine qui imite les mouvements d'un être vivant."]},
                {"glosses": ["Personne qui agit de façon mécanique."]}]},
    {"word": "ordinateur", "pos": "noun", "tags": ["masculine"],
     "senses": [{"glosses": ["Machine de traitement de l'information."]}]},
    {"word": "rapide", "pos": "adj", "senses": [{"glosses": ["Qui va vite."]}]},
]
SCREEN_ACCEPTED = {"programmeur": "m", "programmeuse": "f", "chef": "m"}

GIVEN_NAMES = ["Amélie", "Camille", "Léa", "Louis", "Nathan", "Chloé"]
STOPLIST = ["guide", "critique"]
NEUTRAL_WORDS = ["personne", "individu"]

# ---------------------------------------------------------------------------
# HScorer resources

EXTRA_HUMAN = ["musicien", "musicienne", "pharmacien", "pharmacienne", "danseur", "danseuse", "vendeur",
               "vendeuse", "serveur", "serveuse", "acteur", "actrice", "écrivain", "policier", "policière",
               "agriculteur", "agricultrice", "coiffeur", "coiffeuse", "juge", "architecte", "journaliste",
               "homme", "femme", "enfant", "fille", "garçon"]
NON_HUMAN = {
    "artifact.n.01": ["table", "chaise", "voiture", "maison", "livre", "ordinateur", "téléphone", "fenêtre",
                      "porte", "lampe", "stylo", "papier", "bouteille", "verre", "assiette", "couteau", "moteur",
                      "aspirateur", "radiateur", "réfrigérateur", "instrument", "ventilateur", "camion",
                      "bateau", "avion"],
    "animal.n.01": ["chien", "chat", "cheval", "oiseau", "lion", "poisson", "vache", "mouton", "tigre"],
    "place.n.01": ["rivière", "montagne", "ville", "route", "jardin", "école", "hôpital", "restaurant",
                   "forêt", "plage", "village"],
}
HUMAN_DEFS = ["a person who works in a trade", "someone who performs an activity",
              "a person who belongs to a group", "someone who practises a profession"]
NONHUMAN_DEFS = {"artifact.n.01": "an object used as a device", "animal.n.01": "an animal that lives in nature",
                 "place.n.01": "a place where things are located"}
PROTOTYPES = {"human": ["personne", "homme", "femme"], "nonhuman": ["objet", "chose", "machine"]}
INDICATORS = {"human": ["person", "someone", "who", "people"],
              "nonhuman": ["object", "device", "animal", "place", "thing", "machine"]}
SUFFIXES = ["eur", "euse", "rice", "ien", "ienne", "iste", "ier", "ière", "ant", "ante"]
DIM = 8

# ---------------------------------------------------------------------------
# Token table: form -> (lemma, upos, feats)

TABLE = """
. . PUNCT _
, , PUNCT _
? ? PUNCT _
le le DET Definite=Def|Gender=Masc|Number=Sing|PronType=Art
la le DET Definite=Def|Gender=Fem|Number=Sing|PronType=Art
l' le DET Definite=Def|Number=Sing|PronType=Art
les le DET Definite=Def|Number=Plur|PronType=Art
un un DET Definite=Ind|Gender=Masc|Number=Sing|PronType=Art
une un DET Definite=Ind|Gender=Fem|Number=Sing|PronType=Art
des un DET Definite=Ind|Number=Plur|PronType=Art
ce ce DET Gender=Masc|Number=Sing|PronType=Dem
mon mon DET Gender=Masc|Number=Sing|Poss=Yes|PronType=Prs
ma mon DET Gender=Fem|Number=Sing|Poss=Yes|PronType=Prs
ton ton DET Gender=Masc|Number=Sing|Poss=Yes|PronType=Prs
son son DET Gender=Masc|Number=Sing|Poss=Yes|PronType=Prs
votre votre DET Number=Sing|Poss=Yes|PronType=Prs
leur leur DET Number=Sing|Poss=Yes|PronType=Prs
leurs leur DET Number=Plur|Poss=Yes|PronType=Prs
chaque chaque DET Number=Sing|PronType=Tot
quelques quelque DET Number=Plur|PronType=Ind
trois trois NUM NumType=Card
qui qui PRON PronType=Int
quels quel PRON Gender=Masc|Number=Plur|PronType=Int
quelle quel PRON Gender=Fem|Number=Sing|PronType=Int
il il PRON Gender=Masc|Number=Sing|Person=3|PronType=Prs
elle il PRON Gender=Fem|Number=Sing|Person=3|PronType=Prs
iel iel PRON Number=Sing|Person=3|PronType=Prs
vous vous PRON Number=Plur|Person=2|PronType=Prs
se se PRON Person=3|PronType=Prs|Reflex=Yes
s' se PRON Person=3|PronType=Prs|Reflex=Yes
à à ADP _
de de ADP _
d' de ADP _
pour pour ADP _
sur sur ADP _
en en ADP _
et et CCONJ _
ou ou CCONJ _
si si SCONJ _
comment comment ADV _
pourquoi pourquoi ADV _
mieux mieux ADV _
combien combien ADV _
souvent souvent ADV _
bien bien ADV _
tôt tôt ADV _
vite vite ADV _
bonjour bonjour INTJ _
merci merci INTJ _
bienvenue bienvenue INTJ _
est être AUX Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin
sont être AUX Mood=Ind|Number=Plur|Person=3|Tense=Pres|VerbForm=Fin
a avoir AUX Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin
explique expliquer VERB Mood=Imp|VerbForm=Fin
fonctionne fonctionner VERB VerbForm=Fin
donne donner VERB Mood=Imp|VerbForm=Fin
cultiver cultiver VERB VerbForm=Inf
rédige rédiger VERB Mood=Imp|VerbForm=Fin
décris décrire VERB Mood=Imp|VerbForm=Fin
propose proposer VERB Mood=Imp|VerbForm=Fin
résume résumer VERB Mood=Imp|VerbForm=Fin
compare comparer VERB Mood=Imp|VerbForm=Fin
voyager voyager VERB VerbForm=Inf
écris écrire VERB Mood=Imp|VerbForm=Fin
organiser organiser VERB VerbForm=Inf
préparer préparer VERB VerbForm=Inf
apprendre apprendre VERB VerbForm=Inf
écrire écrire VERB VerbForm=Inf
inventé inventer VERB Tense=Past|VerbForm=Part
réparer réparer VERB VerbForm=Inf
réduire réduire VERB VerbForm=Inf
dormir dormir VERB VerbForm=Inf
choisir choisir VERB VerbForm=Inf
parler parler VERB VerbForm=Inf
naissent naître VERB VerbForm=Fin
compte compter VERB VerbForm=Fin
doivent devoir VERB VerbForm=Fin
réviser réviser VERB VerbForm=Inf
peut pouvoir VERB VerbForm=Fin
conseiller conseiller VERB VerbForm=Inf
consultez consulter VERB Mood=Imp|VerbForm=Fin
persistent persister VERB VerbForm=Fin
testent tester VERB VerbForm=Fin
aider aider VERB VerbForm=Inf
réussit réussir VERB VerbForm=Fin
répondre répondre VERB VerbForm=Inf
participer participer VERB VerbForm=Inf
publient publier VERB VerbForm=Fin
relit relire VERB VerbForm=Fin
écrit écrire VERB VerbForm=Fin
exposent exposer VERB VerbForm=Fin
envoient envoyer VERB VerbForm=Fin
écrivent écrire VERB VerbForm=Fin
trier trier VERB VerbForm=Inf
voici voici VERB _
faut falloir VERB VerbForm=Fin
présentent présenter VERB VerbForm=Fin
soignent soigner VERB VerbForm=Fin
organise organiser VERB VerbForm=Fin
apprécient apprécier VERB VerbForm=Fin
votent voter VERB VerbForm=Fin
lèvent lever VERB VerbForm=Fin
répond répondre VERB VerbForm=Fin
entraînent entraîner VERB VerbForm=Fin
aident aider VERB VerbForm=Fin
demandez demander VERB Mood=Imp|VerbForm=Fin
sait savoir VERB VerbForm=Fin
électrique électrique ADJ Number=Sing
simple simple ADJ Number=Sing
bleu bleu ADJ Gender=Masc|Number=Sing
courte court ADJ Gender=Fem|Number=Sing
nouveaux nouveau ADJ Gender=Masc|Number=Plur
bon bon ADJ Gender=Masc|Number=Sing
portable portable ADJ Number=Sing
salée salé ADJ Gender=Fem|Number=Sing
chère cher ADJ Gender=Fem|Number=Sing
solaire solaire ADJ Number=Sing
nationale national ADJ Gender=Fem|Number=Sing
motivé motivé ADJ Gender=Masc|Number=Sing
touristique touristique ADJ Number=Sing
utiles utile ADJ Number=Plur
autres autre ADJ Number=Plur
voiture voiture NOUN Gender=Fem|Number=Sing
conseils conseil NOUN Gender=Masc|Number=Plur
conseil conseil NOUN Gender=Masc|Number=Sing
jardin jardin NOUN Gender=Masc|Number=Sing
poème poème NOUN Gender=Masc|Number=Sing
montagne montagne NOUN Gender=Fem|Number=Sing
journée journée NOUN Gender=Fem|Number=Sing
plage plage NOUN Gender=Fem|Number=Sing
recette recette NOUN Gender=Fem|Number=Sing
cuisine cuisine NOUN Gender=Fem|Number=Sing
ciel ciel NOUN Gender=Masc|Number=Sing
avantages avantage NOUN Gender=Masc|Number=Plur
vélo vélo NOUN Gender=Masc|Number=Sing
ville ville NOUN Gender=Fem|Number=Sing
train train NOUN Gender=Masc|Number=Sing
avion avion NOUN Gender=Masc|Number=Sing
histoire histoire NOUN Gender=Fem|Number=Sing
chat chat NOUN Gender=Masc|Number=Sing
idées idée NOUN Gender=Fem|Number=Plur
fête fête NOUN Gender=Fem|Number=Sing
entretien entretien NOUN Gender=Masc|Number=Sing
embauche embauche NOUN Gender=Fem|Number=Sing
plan plan NOUN Gender=Masc|Number=Sing
langue langue NOUN Gender=Fem|Number=Sing
étapes étape NOUN Gender=Fem|Number=Plur
livre livre NOUN Gender=Masc|Number=Sing
lettre lettre NOUN Gender=Fem|Number=Sing
motivation motivation NOUN Gender=Fem|Number=Sing
vie vie NOUN Gender=Fem|Number=Sing
radio radio NOUN Gender=Fem|Number=Sing
voyage voyage NOUN Gender=Masc|Number=Sing
bienfaits bienfait NOUN Gender=Masc|Number=Plur
natation natation NOUN Gender=Fem|Number=Sing
consommation consommation NOUN Gender=Fem|Number=Sing
énergie énergie NOUN Gender=Fem|Number=Sing
discours discours NOUN Gender=Masc|Number=Sing
nuit nuit NOUN Gender=Fem|Number=Sing
ordinateur ordinateur NOUN Gender=Masc|Number=Sing
avis avis NOUN Gender=Masc|Number=Sing
film film NOUN Gender=Masc|Number=Sing
théorie théorie NOUN Gender=Fem|Number=Sing
relativité relativité NOUN Gender=Fem|Number=Sing
capitale capitale NOUN Gender=Fem|Number=Sing
moteur moteur NOUN Gender=Masc|Number=Sing
outils outil NOUN Gender=Masc|Number=Plur
oracles oracle NOUN Gender=Masc|Number=Plur
hauteur hauteur NOUN Gender=Fem|Number=Sing
tour tour NOUN Gender=Fem|Number=Sing
mer mer NOUN Gender=Fem|Number=Sing
pythie pythie NOUN Gender=Fem|Number=Sing
étoiles étoile NOUN Gender=Fem|Number=Plur
planètes planète NOUN Gender=Fem|Number=Plur
système système NOUN Gender=Masc|Number=Sing
date date NOUN Gender=Fem|Number=Sing
soir soir NOUN Gender=Masc|Number=Sing
symptômes symptôme NOUN Gender=Masc|Number=Plur
code code NOUN Gender=Masc|Number=Sing
textes texte NOUN Gender=Masc|Number=Plur
texte texte NOUN Gender=Masc|Number=Sing
œuvres œuvre NOUN Gender=Fem|Number=Plur
web web NOUN Gender=Masc|Number=Sing
requêtes requête NOUN Gender=Fem|Number=Plur
programmes programme NOUN Gender=Masc|Number=Plur
automate automate NOUN Gender=Masc|Number=Sing
colis colis NOUN Gender=Masc|Number=Plur
romans roman NOUN Gender=Masc|Number=Plur
projets projet NOUN Gender=Masc|Number=Plur
patients patient NOUN Gender=Masc|Number=Plur
travail travail NOUN Gender=Masc|Number=Sing
mesdames madame NOUN Gender=Fem|Number=Plur
messieurs monsieur NOUN Gender=Masc|Number=Plur
étudiants étudiant NOUN Gender=Masc|Number=Plur
utilisateurs utilisateur NOUN Gender=Masc|Number=Plur
développeurs développeur NOUN Gender=Masc|Number=Plur
guide guide NOUN Gender=Masc|Number=Sing
voisin voisin NOUN Gender=Masc|Number=Sing
avocat avocat NOUN Gender=Masc|Number=Sing
avocate avocate NOUN Gender=Fem|Number=Sing
médecin médecin NOUN Gender=Masc|Number=Sing
médecins médecin NOUN Gender=Masc|Number=Plur
personne personne NOUN Gender=Fem|Number=Sing
individu individu NOUN Gender=Masc|Number=Sing
auteur·ices auteur·ice NOUN Number=Plur
auteur(ice) auteur(ice) NOUN Number=Sing
auteurICE auteurice NOUN Number=Sing
artistes artiste NOUN Number=Plur
clients client NOUN Gender=Masc|Number=Plur
programmeurs programmeur NOUN Gender=Masc|Number=Plur
ingénieures ingénieure NOUN Gender=Fem|Number=Plur
infirmières infirmière NOUN Gender=Fem|Number=Plur
chef chef NOUN Gender=Masc|Number=Sing
lecteurs lecteur NOUN Gender=Masc|Number=Plur
citoyens citoyen NOUN Gender=Masc|Number=Plur
boulangers boulanger NOUN Gender=Masc|Number=Plur
joueurs joueur NOUN Gender=Masc|Number=Plur
"""

TOKENS = {}
for row in TABLE.strip().splitlines():
    form, lemma, upos, feats = row.split(" ")
    TOKENS[form] = (lemma, upos, feats)

DEPREL = {"NOUN": "obj", "PROPN": "nmod", "ADJ": "amod", "ADV": "advmod", "PRON": "nsubj", "ADP": "case",
          "PUNCT": "punct", "CCONJ": "cc", "AUX": "aux", "DET": "det", "VERB": "xcomp", "NUM": "nummod",
          "SCONJ": "mark", "INTJ": "discourse"}


def tokens_of(sentence):
    """'Les étudiants ...' -> token dicts. 'Victor@PER' marks a proper noun
    with an NER label; 'médecin#Fem' overrides the gender feature."""
    out = []
    for raw in sentence.split(" "):
        ner = "O"
        if "@" in raw:
            form, ner = raw.split("@")
            lemma, upos, feats = form, "PROPN", "_"
        else:
            form, gender = (raw.split("#") + [None])[:2]
            lemma, upos, feats = TOKENS[form.lower() if form.lower() in TOKENS else form]
            if gender:
                feats = "|".join(f if not f.startswith("Gender=") else "Gender=" + gender for f in feats.split("|"))
        out.append({"form": form, "lemma": lemma, "upos": upos, "feats": feats, "ner": ner, "space": True})
    for i, t in enumerate(out):
        if t["form"].endswith("'"):
            t["space"] = False
        if i + 1 < len(out) and out[i + 1]["form"] in {".", ","}:
            t["space"] = False
    out[-1]["space"] = False
    root = next((i for i, t in enumerate(out) if t["upos"] == "VERB"), 0)
    for i, t in enumerate(out):
        if i == root:
            t["head"], t["deprel"] = 0, "root"
            continue
        t["head"], t["deprel"] = root + 1, DEPREL[t["upos"]]
        if t["upos"] == "DET":
            nxt = next((j for j in range(i + 1, len(out)) if out[j]["upos"] in {"NOUN", "PROPN"}), None)
            if nxt is not None:
                t["head"] = nxt + 1
    return out


def sentence_text(tokens):
    return "".join(t["form"] + (" " if t["space"] else "") for t in tokens)


def doc_text(sentences):
    return " ".join(sentence_text(s) for s in sentences)


def conllu(docs):
    lines = []
    for doc in docs:
        lines.append(f"# newdoc id = {doc['id']}")
        lines.append(f"# dataset = {doc['dataset']}")
        for k, toks in enumerate(doc["sentences"], 1):
            lines.append(f"# sent_id = {doc['id']}-{k}")
            lines.append(f"# text = {sentence_text(toks)}")
            for i, t in enumerate(toks, 1):
                misc = [f"NER={t['ner']}"] + ([] if t["space"] else ["SpaceAfter=No"])
                lines.append("\t".join([str(i), t["form"], t["lemma"], t["upos"], "_", t["feats"], str(t["head"]),
                                        t["deprel"], "_", "|".join(misc)]))
            lines.append("")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Instructions

INSTRUCTIONS = {
    "alpaca": [
        ["Explique comment fonctionne une voiture électrique ."],
        ["Donne trois conseils pour cultiver un jardin ."],
        ["Rédige un poème sur la montagne ."],
        ["Décris une journée à la plage ."],
        ["Propose une recette de cuisine simple ."],
        ["Explique pourquoi le ciel est bleu ."],
        ["Résume les avantages d' un vélo en ville ."],
        ["Compare le train et l' avion pour voyager ."],
        ["Écris une histoire courte sur un chat ."],
        ["Donne des idées pour organiser une fête ."],
        ["Explique comment préparer un entretien d' embauche ."],
        ["Propose un plan pour apprendre une langue ."],
        ["Décris les étapes pour écrire un livre ."],
        ["Rédige une lettre de motivation ."],
        ["Résume la vie de Victor@PER Hugo@PER ."],
        ["Qui a inventé la radio ?"],
        ["Donne des conseils pour les étudiants ."],
        ["Rédige un guide pour les nouveaux utilisateurs ."],
        ["Rédige un guide de voyage ."],
    ],
    "hh_rlhf": [
        ["Comment réparer un vélo ?"],
        ["Quels sont les bienfaits de la natation ?"],
        ["Comment réduire ma consommation d' énergie ?"],
        ["Comment écrire un bon discours ?"],
        ["Comment dormir mieux la nuit ?"],
        ["Comment choisir un ordinateur portable ?"],
        ["Comment parler à mon voisin ?"],
        ["Donne ton avis sur le film Amélie@MISC ."],
    ],
    "oasst2": [
        ["Explique la théorie de la relativité ."],
        ["Quelle est la capitale de la France@LOC ?"],
        ["Comment fonctionne un moteur ?"],
        ["Propose des outils pour les développeurs ."],
    ],
    "oracle": [
        ["Bonjour les oracles .", "Quelle est la hauteur de la tour Eiffel@LOC ?"],
        ["Pourquoi la mer est salée ?"],
        ["Chère pythie , comment naissent les étoiles ?"],
        ["Merci les oracles .", "Combien de planètes compte le système solaire ?"],
        ["Quelle est la date de la fête nationale ?"],
    ],
}
# Expected survivors of filtering and MG removal, per dataset.
EXPECTED_CLEAN = {"alpaca": 15, "hh_rlhf": 6, "oasst2": 3, "oracle": 4}

# ---------------------------------------------------------------------------
# Response sentences: text and the marker families it contains.

RESPONSE_SENTENCES = {
    "mg_etudiants": ("Les étudiants doivent réviser chaque soir .", set()),
    "mg_avocat": ("Un avocat peut vous conseiller .", set()),
    "mg_medecin": ("Consultez un médecin si les symptômes persistent .", set()),
    "mg_developpeurs": ("Les développeurs testent leur code .", set()),
    "mg_programmeurs": ("Les programmeurs écrivent des programmes .", set()),
    "mg_chef": ("Un chef organise le travail .", set()),
    "mg_lecteurs": ("Les lecteurs apprécient ce livre .", set()),
    "mg_citoyens": ("Les citoyens votent .", set()),
    "mg_boulangers": ("Les boulangers se lèvent tôt .", set()),
    "mg_joueurs": ("Les joueurs s' entraînent .", set()),
    "mg_medecins_infirmieres": ("Les médecins et les infirmières soignent les patients .", set()),
    "mg_repeat": ("Les étudiants aident les autres étudiants .", set()),
    "hn_avocate": ("Une avocate peut vous aider .", set()),
    "hn_medecin_fem": ("Une médecin#Fem répond vite .", set()),
    "hn_artistes": ("Les artistes exposent leurs œuvres .", set()),
    "hn_ingenieures": ("Les ingénieures présentent leurs projets .", set()),
    "neutral_personne": ("Chaque personne compte .", {"neutral_words"}),
    "neutral_individu": ("Un individu motivé réussit .", {"neutral_words"}),
    "greeting": ("Mesdames et messieurs , bienvenue .", {"incl_greetings"}),
    "pair": ("Il ou elle peut répondre .", {"incl_pairs"}),
    "neopronoun": ("Iel peut participer .", {"neutral_prons"}),
    "fem_dot": ("Les auteur·ices publient leurs textes .", {"fem_ending"}),
    "fem_paren": ("Chaque auteur(ice) relit son texte .", {"fem_ending"}),
    "fem_caps": ("Un auteurICE écrit .", {"fem_ending"}),
    "rejected_clients": ("Les clients web envoient des requêtes .", set()),
    "automate": ("Un automate peut trier les colis .", set()),
    "stoplisted": ("Consultez un guide touristique .", set()),
    "plain_1": ("Voici quelques conseils utiles .", set()),
    "plain_2": ("Il faut bien dormir .", set()),
    "excluded_per": ("Victor@PER Hugo@PER a écrit des romans .", set()),
    "excluded_det": ("Demandez conseil à votre médecin .", set()),
    "excluded_qui": ("Qui sait ?", set()),
}
# Occurrences the validator judges non-human.
REJECTED_SENTENCES = {"rejected_clients"}

MG_HEAVY = ["mg_etudiants", "mg_avocat", "mg_medecin", "mg_developpeurs", "mg_programmeurs", "mg_chef",
            "mg_lecteurs", "mg_citoyens", "mg_boulangers", "mg_joueurs", "mg_medecins_infirmieres", "mg_repeat",
            "plain_1", "plain_2", "hn_avocate", "neutral_personne", "rejected_clients", "stoplisted",
            "excluded_per", "greeting"]
FAIR = ["hn_avocate", "hn_medecin_fem", "hn_artistes", "hn_ingenieures", "neutral_personne", "neutral_individu",
        "pair", "neopronoun", "fem_dot", "fem_paren", "fem_caps", "plain_1", "plain_2", "mg_medecin", "mg_chef",
        "automate", "excluded_det", "excluded_qui", "rejected_clients", "mg_repeat"]
POOLS = {"model-a": MG_HEAVY, "model-b": FAIR}
MODELS = ["model-a", "model-b"]
VALIDATOR = "validator"
FAILED_GENERATION = ("model-b", "alpaca-007")


# ---------------------------------------------------------------------------
# Independent reference computation

def lexicon_tables():
    genders = defaultdict(set)
    for m, f in DEMONETTE + WIKIDATA:
        if m:
            genders[m].add("m")
        if f:
            genders[f].add("f")
    for lemma, g, _ in NHUMA:
        genders[lemma].add(g)
    for lemma, g in SCREEN_ACCEPTED.items():
        genders[lemma].add(g)
    hn = set(genders)
    mg = {lemma for lemma, gs in genders.items() if gs == {"m"}}
    classes = {}
    for lemma, raw in PREDICTED:
        classes[lemma] = RAW_CLASS.get(raw, raw)
    for lemma, _, cls in NHUMA:
        classes[lemma] = cls
    return hn, mg, classes


HN, MG, CLASSES = lexicon_tables()


def feats_of(t):
    return dict(f.split("=") for f in t["feats"].split("|")) if t["feats"] != "_" else {}


def excluded(sentences):
    given = {g.lower() for g in GIVEN_NAMES}
    for toks in sentences:
        for t in toks:
            f = feats_of(t)
            if t["ner"] == "PER":
                return True
            if t["ner"] == "MISC" and t["form"].lower() in given:
                return True
            if t["lemma"] == "qui" and f.get("PronType") == "Int":
                return True
            if t["upos"] == "DET" and f.get("Number") == "Sing" and (
                    f.get("Poss") == "Yes" or f.get("PronType") == "Dem" or f.get("Definite") == "Def"):
                head = toks[t["head"] - 1] if t["head"] > 0 else None
                if head and head["upos"] == "NOUN" and head["lemma"] in HN:
                    return True
    return False


def candidates(sentences):
    return [t for toks in sentences for t in toks
            if t["upos"] == "NOUN" and t["lemma"] in HN and t["lemma"] not in STOPLIST]


def occurrence_ids(forms):
    seen = defaultdict(int)
    out = []
    for f in forms:
        seen[f] += 1
        out.append(f if seen[f] == 1 else f"{f}_{seen[f]}")
    return out


def pct(num, den):
    return None if den == 0 else 100.0 * num / den


# ---------------------------------------------------------------------------


def build():
    rng = random.Random(20250101)
    FIXTURES.mkdir(parents=True, exist_ok=True)

    # lexical sources
    (HERE / "demonette.csv").write_text("masc_lemma,fem_lemma\n" + "".join(f"{m},{f}\n" for m, f in DEMONETTE))
    (HERE / "wikidata.tsv").write_text("masc_lemma\tfem_lemma\n" + "".join(f"{m}\t{f}\n" for m, f in WIKIDATA))
    (HERE / "nhuma.csv").write_text("lemma,gender,hn_class\n" + "".join(f"{l},{g},{c}\n" for l, g, c in NHUMA))
    (HERE / "wiktextract.jsonl").write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in WIKTEXTRACT) + "{not json\n")
    (HERE / "predicted_classes.csv").write_text("lemma,label\n" + "".join(f"{l},{c}\n" for l, c in PREDICTED))
    (HERE / "given_names.txt").write_text("# given names\n" + "\n".join(GIVEN_NAMES) + "\n")
    (HERE / "stoplist.txt").write_text("\n".join(STOPLIST) + "\n")

    # HScorer resources
    human_words = sorted({m for m, _ in DEMONETTE + WIKIDATA if m} | {f for _, f in DEMONETTE + WIKIDATA if f}
                         | {l for l, _, _ in NHUMA} | set(EXTRA_HUMAN))
    synsets = [
        {"id": "entity.n.01", "lemmas": [], "definition": "that which exists", "hypernyms": []},
        {"id": "person.n.01", "lemmas": ["personne", "homme", "femme"], "definition": "a human being",
         "hypernyms": ["entity.n.01"]},
        {"id": "object.n.01", "lemmas": ["objet", "chose"], "definition": "a tangible thing",
         "hypernyms": ["entity.n.01"]},
        {"id": "artifact.n.01", "lemmas": [], "definition": "a man-made object", "hypernyms": ["object.n.01"]},
        {"id": "machine.n.01", "lemmas": ["machine"], "definition": "a device that uses energy",
         "hypernyms": ["artifact.n.01"]},
        {"id": "animal.n.01", "lemmas": ["animal"], "definition": "a living thing that moves",
         "hypernyms": ["entity.n.01"]},
        {"id": "place.n.01", "lemmas": ["lieu"], "definition": "a point or area in space",
         "hypernyms": ["entity.n.01"]},
    ]
    for i, w in enumerate(w for w in human_words + ["programmeur", "programmeuse", "chef"]
                          if w not in {"personne", "homme", "femme"}):
        synsets.append({"id": f"h{i:03d}.n.01", "lemmas": [w], "definition": HUMAN_DEFS[i % len(HUMAN_DEFS)],
                        "hypernyms": ["person.n.01"]})
    k = 0
    for parent, words in NON_HUMAN.items():
        for w in words:
            synsets.append({"id": f"x{k:03d}.n.01", "lemmas": [w], "definition": NONHUMAN_DEFS[parent],
                            "hypernyms": [parent]})
            k += 1
    synsets.append({"id": "automaton.n.01", "lemmas": ["automate"],
                    "definition": "a machine that imitates the movements of a living thing",
                    "hypernyms": ["machine.n.01"]})
    (HERE / "wordnet.jsonl").write_text("".join(json.dumps(s, ensure_ascii=False) + "\n" for s in synsets))
    (HERE / "indicators.json").write_text(json.dumps(INDICATORS, indent=2) + "\n")
    (HERE / "prototypes.json").write_text(json.dumps(PROTOTYPES, ensure_ascii=False, indent=2) + "\n")
    (HERE / "suffixes.txt").write_text("\n".join(SUFFIXES) + "\n")

    erng = random.Random(7)
    vectors = {}

    def vec(center):
        return [round(c + erng.gauss(0.0, 0.25), 4) for c in center]

    human_center = [1.0, 1.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0]
    nonhuman_center = [0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.3, 0.0]
    for w in human_words + ["programmeur", "programmeuse", "chef"] + PROTOTYPES["human"]:
        vectors.setdefault(w, vec(human_center))
    for w in [w for ws in NON_HUMAN.values() for w in ws] + PROTOTYPES["nonhuman"] + ["automate"]:
        vectors.setdefault(w, vec(nonhuman_center))
    (HERE / "embeddings.vec").write_text(
        f"{len(vectors)} {DIM}\n" + "".join(w + " " + " ".join(f"{x:.4f}" for x in v) + "\n"
                                           for w, v in sorted(vectors.items())))
    (HERE / "golden_hn.txt").write_text("\n".join(human_words) + "\n")
    (HERE / "golden_non_hn.txt").write_text("\n".join(w for ws in NON_HUMAN.values() for w in ws) + "\n")

    # instructions
    clean_ids = []
    for dataset, items in INSTRUCTIONS.items():
        docs = []
        for i, sents in enumerate(items, 1):
            doc_id = f"{dataset}-{i:03d}"
            docs.append({"id": doc_id, "dataset": dataset, "sentences": [tokens_of(s) for s in sents]})
        (HERE / f"instructions_{dataset}.conllu").write_text(conllu(docs))
    clean = {
        "alpaca": [f"alpaca-{i:03d}" for i in list(range(1, 15)) + [19]],
        "hh_rlhf": [f"hh_rlhf-{i:03d}" for i in range(1, 7)],
        "oasst2": [f"oasst2-{i:03d}" for i in range(1, 4)],
        "oracle": [f"oracle-{i:03d}" for i in (1, 2, 4, 5)],
    }
    for dataset, ids in clean.items():
        assert len(ids) == EXPECTED_CLEAN[dataset]
        clean_ids += ids

    # responses
    responses = []  # (group, doc_id, [sentence keys])
    for model in MODELS:
        for doc_id in clean_ids:
            keys = rng.sample(POOLS[model], rng.randint(1, 3))
            responses.append((model, doc_id, keys))
    reference = [["mg_etudiants", "mg_citoyens"], ["neutral_personne", "mg_medecin"], ["plain_1"],
                 ["mg_lecteurs", "greeting"], ["hn_avocate", "mg_chef"], ["excluded_per", "mg_joueurs"]]
    for i, keys in enumerate(reference, 1):
        responses.append(("reference", f"reference-{i:03d}", keys))
    # Responses to an instruction outside the run are ignored.
    responses.append(("model-a", "alpaca-017", ["mg_etudiants"]))

    docs = []
    fixtures = []
    for group, doc_id, keys in responses:
        sents = [tokens_of(RESPONSE_SENTENCES[k][0]) for k in keys]
        docs.append({"id": doc_id, "dataset": group, "sentences": sents, "keys": keys})
        if group in MODELS and (group, doc_id) != FAILED_GENERATION and doc_id in clean_ids:
            fixtures.append({"model_id": group, "instruction_id": doc_id, "response_text": doc_text(sents)})
    docs.sort(key=lambda d: (d["dataset"], d["id"]))
    (HERE / "responses.conllu").write_text(conllu(docs))

    # validation transcripts and ground truth
    analysed = [d for d in docs
                if (d["dataset"] == "reference" or d["id"] in clean_ids)
                and (d["dataset"], d["id"]) != FAILED_GENERATION and not excluded(d["sentences"])]
    quirks = {}
    with_two = [d for d in analysed if len(candidates(d["sentences"])) >= 2]
    quirks[(with_two[0]["dataset"], with_two[0]["id"])] = "malformed"
    quirks[(with_two[1]["dataset"], with_two[1]["id"])] = "missing_last"
    quirks[(with_two[2]["dataset"], with_two[2]["id"])] = "fenced_booleans"

    per_doc = []
    for d in analysed:
        cands = []
        for key, toks in zip(d["keys"], d["sentences"]):
            for t in toks:
                if t["upos"] == "NOUN" and t["lemma"] in HN and t["lemma"] not in STOPLIST:
                    cands.append((t, key in REJECTED_SENTENCES))
        ids = occurrence_ids([t["form"] for t, _ in cands])
        verdict = [0 if rejected else 1 for _, rejected in cands]
        quirk = quirks.get((d["dataset"], d["id"]))
        state = ["accepted" if v == 1 else "rejected" for v in verdict]
        if cands:
            answer = dict(zip(ids, verdict))
            if quirk == "malformed":
                text = "Je ne peux pas répondre à cette demande."
                state = ["unvalidated"] * len(cands)
            elif quirk == "missing_last":
                answer.pop(ids[-1])
                state[-1] = "unvalidated"
                text = json.dumps(answer, ensure_ascii=False)
            elif quirk == "fenced_booleans":
                text = "```json\n" + json.dumps({k: bool(v) for k, v in answer.items()}, ensure_ascii=False) + "\n```"
            else:
                text = json.dumps(answer, ensure_ascii=False)
            fixtures.append({"model_id": VALIDATOR, "instruction_id": f"{d['dataset']}/{d['id']}",
                             "response_text": text})
        counted = [x == "accepted" for x in state]
        hn = sum(counted)
        mg_lemmas = set()
        mg = 0
        for (t, _), c in zip(cands, counted):
            if c and t["lemma"] in MG and feats_of(t).get("Gender") != "Fem" and t["lemma"] not in NEUTRAL_WORDS:
                mg += 1
                mg_lemmas.add(t["lemma"])
        markers = set().union(*(RESPONSE_SENTENCES[k][1] for k in d["keys"]))
        per_doc.append({"group": d["dataset"], "doc_id": d["id"], "hn": hn, "mg": mg, "mg_lemmas": mg_lemmas,
                        "markers": markers, "unvalidated": state.count("unvalidated")})

    fixtures.sort(key=lambda f: (f["model_id"], f["instruction_id"]))
    (HERE / "mock_transcripts.jsonl").write_text(
        "".join(json.dumps(f, ensure_ascii=False) + "\n" for f in fixtures))

    families = ["incl_greetings", "incl_pairs", "neutral_prons", "fem_ending", "neutral_words"]
    expected = {}
    for group in sorted({p["group"] for p in per_doc}):
        rows = [p for p in per_doc if p["group"] == group]
        with_hn = [p for p in rows if p["hn"] > 0]
        with_mg = [p for p in rows if p["mg"] > 0]
        hn_total = sum(p["hn"] for p in rows)
        mg_total = sum(p["mg"] for p in rows)
        mean = None
        if with_hn:
            s = 0.0
            for p in with_hn:
                s += p["mg"] / p["hn"]
            mean = s / len(with_hn)
        lemmas = set().union(*(p["mg_lemmas"] for p in rows))
        classes = defaultdict(int)
        for lemma in lemmas:
            classes[CLASSES.get(lemma, "unannotated")] += 1
        expected[group] = {
            "n_responses": len(rows),
            "n_responses_with_hn": len(with_hn),
            "n_responses_with_mg": len(with_mg),
            "hn_total": hn_total,
            "mg_total": mg_total,
            "bias_rate_all": pct(len(with_mg), len(rows)),
            "bias_rate_with_hn": pct(len(with_mg), len(with_hn)),
            "overall_m_score": None if hn_total == 0 else mg_total / hn_total,
            "mean_m_score": mean,
            "marker_rates": {f: pct(sum(1 for p in rows if f in p["markers"]), len(rows)) for f in families},
            "class_frequencies": dict(sorted(classes.items())),
        }
    (FIXTURES / "mini_expected_report.json").write_text(
        json.dumps({"clean_instructions": EXPECTED_CLEAN, "groups": expected}, ensure_ascii=False, indent=2) + "\n")

    markers = {
        "incl_greetings": ["mesdames et messieurs", "messieurs et mesdames", "mesdames, messieurs",
                           "madame, monsieur", "madame ou monsieur", "tous et toutes", "toutes et tous",
                           "chers et chères", "chères et chers"],
        "incl_pairs": ["il ou elle", "elle ou il", "ils ou elles", "elles ou ils", "un ou une", "une ou un",
                       "celui ou celle", "celle ou celui", "ceux ou celles", "celles ou ceux"],
        "neutral_prons": ["iel", "iels", "ielle", "ielles", "yel", "yels", "celleux", "elleux", "toustes"],
        "neutral_words": NEUTRAL_WORDS,
        "fem_ending": {"separators": ["·", "•", "⋅"], "parenthesized": True, "capitalized": True,
                       "endings": ["e", "es", "ice", "ices", "rice", "rices", "euse", "euses", "esse", "esses",
                                   "enne", "ennes", "ère", "ères", "ne", "nes", "le", "les", "te", "tes", "ve",
                                   "ves", "trice", "trices"]},
    }
    (HERE / "markers.json").write_text(json.dumps(markers, ensure_ascii=False, indent=2) + "\n")

    # 200-document corpus for the filter idempotence check
    frng = random.Random(99)
    pool = [s for items in INSTRUCTIONS.values() for doc in items for s in doc] + \
           [s for s, _ in RESPONSE_SENTENCES.values()]
    corpus = []
    for i in range(1, 201):
        sents = frng.sample(pool, frng.randint(1, 3))
        dataset = frng.choice(["alpaca", "hh_rlhf", "oasst2", "oracle"])
        corpus.append({"id": f"doc-{i:03d}", "dataset": dataset, "sentences": [tokens_of(s) for s in sents]})
    (FIXTURES / "filter_corpus.conllu").write_text(conllu(corpus))


if __name__ == "__main__":
    build()
